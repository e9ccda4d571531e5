//! Every configured method on every analytic benchmark, checked against the
//! closed-form references.

use std::fmt::Write as _;
use std::path::Path;

use gsa_core::analyzers::{
    analyze_delta, analyze_dgsm, analyze_fast, analyze_morris, analyze_rbd, analyze_sobol, default_classes,
};
use gsa_core::samplers::{
    balanced_sample, fast_sample, finite_difference_sample, latin_hypercube_sample, morris_sample, saltelli_sample,
    FastConfig, MorrisConfig, RbdConfig,
};
use gsa_core::testfuncs::Benchmark;
use gsa_core::{evaluate_model, SensitivityResult};
use gsa_digits::casestudy::{Method, SaConfig};
use serde::Serialize;

use crate::config::BenchmarkId;
use crate::{write_file, CliError};

/// Largest accepted |S1 - reference| per variance-based method.
pub fn s1_tolerance(method: Method) -> Option<f64> {
    match method {
        Method::Sobol => Some(0.03),
        Method::Fast => Some(0.05),
        Method::Rbd | Method::Hybrid => Some(0.07),
        _ => None,
    }
}

/// Reference gap above which two factors must be ranked the right way round.
const DELTA_SEPARATION: f64 = 0.05;
const NULL_DELTA: f64 = 0.05;
const EXACT: f64 = 1e-9;
const DGSM_RELATIVE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub benchmark: BenchmarkId,
    pub method: Method,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub results: Vec<(BenchmarkId, Method, SensitivityResult)>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("benchmark,method,check,passed,detail\n");
        for c in &self.checks {
            writeln!(
                out,
                "{},{},{},{},\"{}\"",
                c.benchmark.as_str(),
                c.method,
                c.name,
                c.passed,
                c.detail.replace('"', "'")
            )
            .unwrap();
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            writeln!(
                out,
                "{:<4} {:<9} {:<7} {:<22} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.benchmark.as_str(),
                c.method.as_str(),
                c.name,
                c.detail
            )
            .unwrap();
        }
        let failed = self.failures().count();
        writeln!(out, "{} checks, {} failed", self.checks.len(), failed).unwrap();
        out
    }

    /// Writes `<method>_<benchmark>.csv` index tables and `checks.csv`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        for (bench, method, result) in &self.results {
            write_file(&dir.join(format!("{}_{}.csv", method, bench.as_str())), result.to_csv())?;
        }
        write_file(&dir.join("checks.csv"), self.to_csv())
    }
}

/// Runs one method on one benchmark.
pub fn analyse(method: Method, bench: &Benchmark, sizes: &SaConfig, seed: u64) -> Result<SensitivityResult, CliError> {
    let spec = bench.spec();
    let names = spec.names();
    let run = |m: &gsa_core::SampleMatrix| evaluate_model(bench.evaluator(), m);
    let result = match method {
        Method::Sobol => {
            let m = saltelli_sample(spec, sizes.sobol.base_n, false, seed)?;
            analyze_sobol(&m, &run(&m)?, sizes.sobol.bootstrap)?.to_result(names)
        }
        Method::Fast => {
            let cfg = FastConfig {
                harmonics: sizes.fast.harmonics,
                ..FastConfig::new(sizes.fast.samples)
            };
            let m = fast_sample(spec, &cfg)?;
            analyze_fast(&m, &run(&m)?)?.to_result("fast", names)
        }
        Method::Rbd | Method::Hybrid => {
            let s = if method == Method::Rbd { &sizes.rbd } else { &sizes.hybrid };
            let cfg = RbdConfig {
                samples: s.samples,
                harmonics: s.harmonics,
                groups: s.groups.min(spec.num_factors()),
            };
            let m = balanced_sample(spec, &cfg, seed)?;
            analyze_rbd(&m, &run(&m)?)?.to_result(method.as_str(), names)
        }
        Method::Morris => {
            let cfg = MorrisConfig {
                trajectories: sizes.morris.trajectories,
                levels: sizes.morris.levels,
            };
            let m = morris_sample(spec, &cfg, seed)?;
            analyze_morris(&m, &run(&m)?)?.to_result(names)
        }
        Method::Dgsm => {
            let m = finite_difference_sample(spec, sizes.dgsm.base_n, sizes.dgsm.step, seed)?;
            analyze_dgsm(&m, &run(&m)?)?.to_result(names)
        }
        Method::Delta => {
            let m = latin_hypercube_sample(spec, sizes.delta.samples, seed)?;
            let classes = sizes.delta.classes.unwrap_or_else(|| default_classes(m.rows()));
            analyze_delta(&m, &run(&m)?, classes, sizes.delta.bootstrap)?.to_result(names)
        }
    };
    Ok(result)
}

fn fmt(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
    format!("[{}]", parts.join(" "))
}

/// Pairs `(i, j)` with `reference[i] - reference[j] > gap` that the estimate
/// orders the other way.
fn misordered(estimate: &[f64], reference: &[f64], gap: f64) -> Vec<(usize, usize)> {
    let mut bad = Vec::new();
    for i in 0..reference.len() {
        for j in 0..reference.len() {
            if reference[i] - reference[j] > gap && estimate[i] <= estimate[j] {
                bad.push((i + 1, j + 1));
            }
        }
    }
    bad
}

fn ordering_detail(estimate: &[f64], reference: &[f64], gap: f64) -> (bool, String) {
    let bad = misordered(estimate, reference, gap);
    let detail = if bad.is_empty() {
        format!("{} against reference {}", fmt(estimate), fmt(reference))
    } else {
        format!("misordered factor pairs {bad:?}: {} vs {}", fmt(estimate), fmt(reference))
    };
    (bad.is_empty(), detail)
}

/// Pass/fail checks for one method's result on one benchmark.
pub fn checks(id: BenchmarkId, method: Method, bench: &Benchmark, result: &SensitivityResult) -> Vec<Check> {
    let s1_ref = bench.reference_s1();
    let st_ref = bench.reference_st();
    let mut out = Vec::new();
    let mut push = |name: &str, (passed, detail): (bool, String)| {
        out.push(Check {
            benchmark: id,
            method,
            name: name.to_string(),
            passed,
            detail,
        })
    };
    let index = |name: &str| result.index(name).expect("analyzer reports its index").to_vec();
    match method {
        Method::Sobol | Method::Fast | Method::Rbd | Method::Hybrid => {
            let tol = s1_tolerance(method).expect("variance method");
            let s1 = index("S1");
            let err = s1.iter().zip(s1_ref).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            push(
                "s1_within_tolerance",
                (err <= tol, format!("max |S1 - ref| = {err:.4} (tolerance {tol}); S1 = {}", fmt(&s1))),
            );
            push("s1_ranking", ordering_detail(&s1, s1_ref, 2.0 * tol));
        }
        Method::Morris => {
            let mu_star = index("mu_star");
            if id == BenchmarkId::Ishigami {
                // interactions blur the elementary-effect ordering; every
                // influential factor must still be screened in
                let top = mu_star.iter().copied().fold(0.0, f64::max);
                let missed: Vec<usize> = (0..mu_star.len())
                    .filter(|&i| st_ref[i] >= 0.01 && mu_star[i] < 0.05 * top)
                    .map(|i| i + 1)
                    .collect();
                push(
                    "mu_star_screening",
                    (missed.is_empty(), format!("mu* = {}; screened out {missed:?}", fmt(&mu_star))),
                );
            } else {
                push("mu_star_ranking", ordering_detail(&mu_star, s1_ref, 0.0));
            }
            if id == BenchmarkId::Linear {
                let sigma = index("sigma");
                let c = BenchmarkId::LINEAR_COEFFICIENTS;
                let ok = mu_star.iter().zip(&c).all(|(m, c)| (m - c.abs()).abs() <= EXACT)
                    && sigma.iter().all(|s| s.abs() <= EXACT);
                push(
                    "linear_effects_exact",
                    (ok, format!("mu* = {} sigma = {} expected mu* = {c:?}", fmt(&mu_star), fmt(&sigma))),
                );
            }
        }
        Method::Dgsm => {
            let v = index("v");
            let variance = bench.reference_variance();
            let pi2 = std::f64::consts::PI.powi(2);
            let bound: Vec<f64> = v.iter().map(|vi| vi / (pi2 * variance)).collect();
            let ok = st_ref.iter().zip(&bound).all(|(st, b)| *st <= b * (1.0 + DGSM_RELATIVE) + EXACT);
            push(
                "total_effect_bound",
                (ok, format!("ST ref {} <= v/(pi^2 V) = {}", fmt(st_ref), fmt(&bound))),
            );
            if id == BenchmarkId::Linear {
                let c = BenchmarkId::LINEAR_COEFFICIENTS;
                let ok = v.iter().zip(&c).all(|(vi, ci)| (vi - ci * ci).abs() <= DGSM_RELATIVE * ci * ci);
                push("linear_exact", (ok, format!("v = {} expected c^2 = {c:?}", fmt(&v))));
            }
        }
        Method::Delta => {
            let delta = index("delta");
            let in_range = delta.iter().all(|d| (0.0..=1.0).contains(d));
            push("delta_in_unit_interval", (in_range, fmt(&delta)));
            push("delta_ranking", ordering_detail(&delta, s1_ref, DELTA_SEPARATION));
            let nulls: Vec<usize> = (0..delta.len()).filter(|&i| st_ref[i] == 0.0).collect();
            if !nulls.is_empty() {
                let ok = nulls.iter().all(|&i| delta[i] <= NULL_DELTA);
                push("null_factor", (ok, format!("delta of factors {nulls:?}: {}", fmt(&delta))));
            }
        }
    }
    out
}

pub fn run_verify(
    methods: &[Method],
    benchmarks: &[BenchmarkId],
    sizes: &SaConfig,
    seed: u64,
) -> Result<VerifyReport, CliError> {
    let mut report = VerifyReport {
        checks: Vec::new(),
        results: Vec::new(),
    };
    for &id in benchmarks {
        let bench = id.benchmark();
        for &method in methods {
            let result = analyse(method, &bench, sizes, seed)?;
            report.checks.extend(checks(id, method, &bench, &result));
            report.results.push((id, method, result));
        }
    }
    Ok(report)
}
