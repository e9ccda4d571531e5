//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary so every line is printed even when a criterion
//! fails; the process exits non-zero if any criterion fails. Criteria 7 to
//! 10 need the MNIST files in `data/mnist` (or under `$GSA_DATA_DIR`).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use gsa_cli::config::{BenchmarkId, RunConfig, DATA_DIR_VAR};
use gsa_cli::{run_casestudy, run_verify, CaseStudyOutcome};
use gsa_core::analyzers::{
    analyze_delta, analyze_dgsm, analyze_fast, analyze_morris, analyze_rbd, analyze_sobol, Warning,
    DEFAULT_BOOTSTRAP,
};
use gsa_core::samplers::{
    fast_sample, finite_difference_sample, hybrid_fast_rbd_sample, latin_hypercube_sample, morris_sample,
    rbd_sample, saltelli_sample, FastConfig, MorrisConfig,
};
use gsa_core::testfuncs::{ishigami, sobol_g};
use gsa_core::{evaluate_model, model_fn, Layout, ProblemSpec, SampleMatrix};
use gsa_digits::casestudy::{center_and_border, Method};
use gsa_digits::cnn::{FC_W, NUM_PARAMETERS};
use gsa_digits::{MnistFiles, TinyCnn, TrainConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::{Rng, SeedableRng};

/// Ishigami (a = 7, b = 0.1) first-order indices from nested
/// Gauss-Legendre quadrature, rounded to four places.
const ISHIGAMI_S1: [f64; 3] = [0.3139, 0.4424, 0.0];
const SEED: u64 = 1;

struct Line {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn line(id: &'static str, passed: bool, detail: impl Into<String>) -> Line {
    Line {
        id,
        passed,
        detail: detail.into(),
    }
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn max_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn ishigami_spec() -> ProblemSpec {
    let pi = std::f64::consts::PI;
    ProblemSpec::uniform(3, -pi, pi).unwrap()
}

fn run_ishigami(m: &SampleMatrix) -> gsa_core::OutputVector {
    evaluate_model(&model_fn(|x: &[f64]| ishigami(x, 7.0, 0.1)), m).unwrap()
}

fn criterion_1() -> Vec<Line> {
    let t = Instant::now();
    let m = saltelli_sample(&ishigami_spec(), 1024, false, SEED).unwrap();
    let s = analyze_sobol(&m, &run_ishigami(&m), DEFAULT_BOOTSTRAP).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let err = max_error(&s.s1, &ISHIGAMI_S1);
    let order = s.st[0] > s.st[2] && s.st[2] > s.s1[2];
    vec![line(
        "1",
        err <= 0.03 && order && secs < 5.0,
        format!(
            "Sobol Ishigami N=1024: S1 {} (max err {err:.4} <= 0.03), ST {} (ST1 > ST3 > S1_3: {order}), {secs:.2} s",
            fmt(&s.s1),
            fmt(&s.st)
        ),
    )]
}

fn criterion_2() -> Vec<Line> {
    let t = Instant::now();
    let m = fast_sample(&ishigami_spec(), &FastConfig::new(1024)).unwrap();
    let f = analyze_fast(&m, &run_ishigami(&m)).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let st = f.st.unwrap();
    let err = max_error(&f.s1, &ISHIGAMI_S1);
    let leak = f.s1.iter().zip(&st).all(|(a, b)| *a <= b + 0.05);
    vec![line(
        "2",
        err <= 0.05 && leak && secs < 5.0,
        format!(
            "FAST Ishigami N=1024 M=4: S1 {} (max err {err:.4} <= 0.05), ST {} (S1 <= ST + 0.05: {leak}), {secs:.2} s",
            fmt(&f.s1),
            fmt(&st)
        ),
    )]
}

fn criterion_3() -> Vec<Line> {
    let spec = ishigami_spec();
    let m = rbd_sample(&spec, 1024, SEED).unwrap();
    let r = analyze_rbd(&m, &run_ishigami(&m)).unwrap();
    let h = hybrid_fast_rbd_sample(&spec, 1024, 1, SEED).unwrap();
    let hy = analyze_rbd(&h, &run_ishigami(&h)).unwrap();
    let err = max_error(&r.s1, &ISHIGAMI_S1);
    let gap = max_error(&r.s1, &hy.s1);
    vec![line(
        "3",
        err <= 0.07 && r.s1[2] <= 0.05 && gap <= 0.02,
        format!(
            "RBD Ishigami N=1024: S1 {} (max err {err:.4} <= 0.07, S1_3 <= 0.05); hybrid g=1 differs by {gap:.4} <= 0.02",
            fmt(&r.s1)
        ),
    )]
}

fn argsort_desc(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    idx
}

fn criterion_4() -> Vec<Line> {
    let cfg = MorrisConfig {
        trajectories: 50,
        levels: 4,
    };
    let a = [0.0, 1.0, 4.5, 9.0];
    let spec = ProblemSpec::uniform(4, 0.0, 1.0).unwrap();
    let m = morris_sample(&spec, &cfg, SEED).unwrap();
    let g = analyze_morris(&m, &evaluate_model(&model_fn(|x: &[f64]| sobol_g(x, &a)), &m).unwrap()).unwrap();
    // partial variances (1/3)/(1+a)^2 decrease with a
    let ordered = argsort_desc(&g.mu_star) == vec![0, 1, 2, 3];

    let spec2 = ProblemSpec::uniform(2, 0.0, 1.0).unwrap();
    let m2 = morris_sample(&spec2, &cfg, SEED).unwrap();
    let l = analyze_morris(&m2, &evaluate_model(&model_fn(|x: &[f64]| 2.0 * x[0] + x[1]), &m2).unwrap()).unwrap();
    let exact = max_error(&l.mu_star, &[2.0, 1.0]) <= 1e-9 && max_error(&l.sigma, &[0.0, 0.0]) <= 1e-9;
    vec![line(
        "4",
        ordered && exact,
        format!(
            "Morris r=50 p=4: g-function mu* {} (ordered a=0 first, a=9 last: {ordered}); linear mu* {} sigma {} (exact: {exact})",
            fmt(&g.mu_star),
            fmt(&l.mu_star),
            fmt(&l.sigma)
        ),
    )]
}

fn criterion_5() -> Vec<Line> {
    let spec = ProblemSpec::uniform(2, 0.0, 1.0).unwrap();
    let m = finite_difference_sample(&spec, 1024, 1e-3, SEED).unwrap();
    let d = analyze_dgsm(&m, &evaluate_model(&model_fn(|x: &[f64]| 3.0 * x[0]), &m).unwrap()).unwrap();
    let linear_ok = max_error(&d.v, &[9.0, 0.0]) <= 1e-6;

    let ispec = ishigami_spec();
    let m = finite_difference_sample(&ispec, 1024, 1e-3, SEED).unwrap();
    let v = analyze_dgsm(&m, &run_ishigami(&m)).unwrap().v;
    let sm = saltelli_sample(&ispec, 1024, false, SEED).unwrap();
    let st = analyze_sobol(&sm, &run_ishigami(&sm), 0).unwrap().st;
    let same = (v[0] > v[1]) == (st[0] > st[1]);
    vec![
        line(
            "5a",
            linear_ok,
            format!("DGSM linear c=[3,0]: v {} within 1e-6 of [9, 0]", fmt(&d.v)),
        ),
        line(
            "5b",
            same,
            format!(
                "DGSM Ishigami: v {} orders factors 1,2 as {}; Sobol ST {} orders them as {}",
                fmt(&v),
                if v[0] > v[1] { "1 > 2" } else { "2 > 1" },
                fmt(&st),
                if st[0] > st[1] { "1 > 2" } else { "2 > 1" }
            ),
        ),
    ]
}

fn criterion_6() -> Vec<Line> {
    let spec = ProblemSpec::uniform(2, 0.0, 1.0).unwrap();
    let m = latin_hypercube_sample(&spec, 2048, SEED).unwrap();
    let y = evaluate_model(&model_fn(|x: &[f64]| x[0]), &m).unwrap();
    let classes = gsa_core::analyzers::default_classes(2048);
    let d = analyze_delta(&m, &y, classes, 0).unwrap().delta;
    let ey = evaluate_model(&model_fn(|x: &[f64]| x[0].exp()), &m).unwrap();
    let de = analyze_delta(&m, &ey, classes, 0).unwrap().delta;
    let ok = d[0] >= 5.0 * d[1] && d[1] <= 0.05 && argsort_desc(&d) == argsort_desc(&de);
    vec![line(
        "6",
        ok,
        format!("Delta N=2048 LHS, Y=X1: delta {} ; Y=exp(X1): delta {}", fmt(&d), fmt(&de)),
    )]
}

fn data_dir() -> PathBuf {
    let rel = Path::new("data/mnist");
    if std::env::var_os(DATA_DIR_VAR).is_some() {
        RunConfig::resolve_data_path(rel)
    } else {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
    }
}

/// Relative error of the backpropagated gradient against central
/// differences on ten random parameters.
fn gradient_check(image: &[f64], label: usize) -> f64 {
    let model = TinyCnn::init(11);
    let (_, grad) = model.loss_gradient(image, label);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let mut probe: Vec<usize> = (0..5).map(|_| rng.random_range(0..FC_W)).collect();
    probe.extend((0..5).map(|_| rng.random_range(FC_W..NUM_PARAMETERS)));
    let h = 1e-4;
    probe
        .into_iter()
        .map(|k| {
            let mut p = model.parameters().to_vec();
            p[k] += h;
            let up = TinyCnn::from_parameters(p.clone()).unwrap().loss_gradient(image, label).0;
            p[k] -= 2.0 * h;
            let down = TinyCnn::from_parameters(p).unwrap().loss_gradient(image, label).0;
            let numeric = (up - down) / (2.0 * h);
            (numeric - grad[k]).abs() / numeric.abs().max(grad[k].abs()).max(1e-6)
        })
        .fold(0.0, f64::max)
}

struct CaseStudy {
    first: CaseStudyOutcome,
    config: RunConfig,
}

fn casestudy_config(model: &Path, out: &Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.methods = vec![Method::Morris, Method::Sobol];
    c.seed = SEED;
    c.subset_n = 16;
    c.out = out.to_path_buf();
    c.data.dir = data_dir();
    c.data.model = Some(model.to_path_buf());
    c
}

fn mnist_criteria(work: &Path) -> (Vec<Line>, Option<CaseStudy>) {
    let files = MnistFiles::in_dir(data_dir());
    let missing = files.missing();
    if !missing.is_empty() {
        let why = format!("MNIST files missing: {missing:?}");
        return (
            ["7", "8", "9", "10"].into_iter().map(|id| line(id, false, why.clone())).collect(),
            None,
        );
    }
    let (train, test) = files.load().unwrap();
    let t = Instant::now();
    let model = TinyCnn::train(&train, &TrainConfig::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let acc = model.accuracy(&test);
    let grad = gradient_check(&test.image(0), test.label(0));
    let mut lines = vec![line(
        "7",
        acc >= 0.97 && secs < 900.0 && grad <= 1e-3,
        format!("TinyCnn: test accuracy {acc:.4} >= 0.97, trained in {secs:.1} s < 900 s, gradient rel err {grad:.2e} <= 1e-3"),
    )];
    let model_path = work.join("model.bin");
    model.save(&model_path).unwrap();
    let config = casestudy_config(&model_path, &work.join("run1"));
    let first = run_casestudy(&config).unwrap();

    let mut ok8 = true;
    let mut detail8 = Vec::new();
    for label in ["morris", "sobol"] {
        let e = first.blocks.iter().find(|e| e.method == label).unwrap();
        let (top, bottom) = e.smallest_block();
        // block sizes are stored largest first
        let monotone = e.accuracy_top.windows(2).all(|w| w[1] <= w[0] + 0.03);
        ok8 &= top - bottom >= 0.10 && monotone;
        detail8.push(format!(
            "{label}: top-84 {top:.4} vs bottom-84 {bottom:.4} (gap {:.4} >= 0.10), top curve {} non-decreasing within 0.03: {monotone}",
            top - bottom,
            fmt(&e.accuracy_top)
        ));
    }
    lines.push(line("8", ok8, detail8.join("; ")));

    let mut ok9 = true;
    let mut detail9 = Vec::new();
    for (method, index) in [(Method::Morris, "mu_star"), (Method::Sobol, "ST")] {
        let map = first
            .maps
            .iter()
            .find(|m| m.method == method && m.index_name == index)
            .unwrap();
        let (center, border) = center_and_border(&map.values);
        ok9 &= center > border;
        detail9.push(format!("{method} {index}: center {center:.3e} > border {border:.3e}"));
    }
    lines.push(line("9", ok9, detail9.join("; ")));
    (lines, Some(CaseStudy { first, config }))
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(csv_files(&path));
        } else if path.extension().is_some_and(|e| e == "csv") {
            out.push(path);
        }
    }
    out.sort();
    out
}

fn identical_csvs(a: &Path, b: &Path) -> (bool, usize) {
    let fa = csv_files(a);
    let fb = csv_files(b);
    let same_names = fa.iter().map(|p| p.strip_prefix(a).unwrap()).eq(fb.iter().map(|p| p.strip_prefix(b).unwrap()));
    let same_bytes = fa
        .iter()
        .zip(&fb)
        .all(|(x, y)| std::fs::read(x).unwrap() == std::fs::read(y).unwrap());
    (same_names && same_bytes && !fa.is_empty(), fa.len())
}

fn criterion_10(work: &Path, study: Option<&CaseStudy>) -> Vec<Line> {
    let config = RunConfig::default();
    let sizes = config.verify_sizes();
    let v1 = work.join("verify1");
    let v2 = work.join("verify2");
    run_verify(&Method::ALL, &BenchmarkId::ALL, &sizes, SEED).unwrap().write(&v1).unwrap();
    run_verify(&Method::ALL, &BenchmarkId::ALL, &sizes, SEED).unwrap().write(&v2).unwrap();
    let (verify_same, verify_files) = identical_csvs(&v1, &v2);
    let Some(study) = study else {
        return vec![line("10", false, format!("verify rerun identical: {verify_same}; case study not run"))];
    };
    let mut again = study.config.clone();
    again.out = work.join("run2");
    let second = run_casestudy(&again).unwrap();
    let (cs_same, cs_files) = identical_csvs(&study.config.out, &again.out);
    let hash_same = second.manifest.model.hash == study.first.manifest.model.hash;
    vec![line(
        "10",
        verify_same && cs_same && hash_same,
        format!(
            "rerun byte-identical: verify {verify_same} ({verify_files} CSVs), case study {cs_same} ({cs_files} CSVs), model hash {hash_same}"
        ),
    )]
}

fn specs() -> impl Strategy<Value = ProblemSpec> {
    prop::collection::vec((-50.0f64..50.0, 0.01f64..20.0), 1..6).prop_map(|b| {
        let names = (0..b.len()).map(|i| format!("f{i}")).collect();
        ProblemSpec::new(names, b.into_iter().map(|(lo, w)| (lo, lo + w)).collect()).unwrap()
    })
}

fn property_case(spec: &ProblemSpec, seed: u64, w: &[f64]) -> Result<(), TestCaseError> {
    let k = spec.num_factors();
    let morris_cfg = MorrisConfig {
        trajectories: 4,
        levels: 4,
    };
    let mut designs = vec![
        saltelli_sample(spec, 256, false, seed).unwrap(),
        fast_sample(spec, &FastConfig::new(256)).unwrap(),
        rbd_sample(spec, 128, seed).unwrap(),
        morris_sample(spec, &morris_cfg, seed).unwrap(),
        finite_difference_sample(spec, 16, 1e-3, seed).unwrap(),
        latin_hypercube_sample(spec, 256, seed).unwrap(),
    ];
    if k >= 2 {
        designs.push(hybrid_fast_rbd_sample(spec, 256, 2, seed).unwrap());
    }
    for m in &designs {
        for r in 0..m.rows() {
            let row = m.row(r);
            prop_assert!(
                row.iter().zip(spec.bounds()).all(|(v, (lo, hi))| v >= lo && v <= hi),
                "{:?} row {r} out of bounds",
                m.kind()
            );
        }
    }

    let morris = &designs[3];
    let Layout::Morris(l) = morris.layout() else {
        unreachable!()
    };
    for t in 0..l.trajectories {
        for s in 0..k {
            let a = morris.row(l.start(t) + s);
            let b = morris.row(l.start(t) + s + 1);
            let changed: Vec<usize> = (0..k).filter(|&c| a[c] != b[c]).collect();
            prop_assert_eq!(changed.len(), 1);
            let c = changed[0];
            let step = (spec.normalize(c, b[c]) - spec.normalize(c, a[c])).abs();
            prop_assert!((step - l.delta).abs() < 1e-9);
        }
    }

    let model = model_fn(|x: &[f64]| {
        let u: Vec<f64> = (0..x.len()).map(|i| spec.normalize(i, x[i])).collect();
        let y: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
        if u.len() > 1 {
            y + w[0] * u[0] * u[1]
        } else {
            y
        }
    });
    let s = analyze_sobol(&designs[0], &evaluate_model(&model, &designs[0]).unwrap(), 30).unwrap();
    for i in 0..k {
        prop_assert!(s.s1[i] <= s.st[i] + s.s1_conf[i] + s.st_conf[i] + 0.02);
    }
    let f = analyze_fast(&designs[1], &evaluate_model(&model, &designs[1]).unwrap()).unwrap();
    let st = f.st.unwrap();
    for i in 0..k {
        prop_assert!(f.s1[i] <= st[i] + 0.05);
    }
    let v = analyze_dgsm(&designs[4], &evaluate_model(&model, &designs[4]).unwrap()).unwrap().v;
    prop_assert!(v.iter().all(|&x| x >= 0.0));
    let d = analyze_delta(&designs[5], &evaluate_model(&model, &designs[5]).unwrap(), 16, 0).unwrap().delta;
    prop_assert!(d.iter().all(|x| (0.0..=1.0).contains(x)));

    let constant = model_fn(|_: &[f64]| 2.5);
    let warned = Some(Warning::ConstantOutput);
    let run = |m: &SampleMatrix| evaluate_model(&constant, m).unwrap();
    let s = analyze_sobol(&designs[0], &run(&designs[0]), 10).unwrap();
    prop_assert!(s.warning == warned && s.s1.iter().chain(&s.st).all(|&x| x == 0.0));
    let f = analyze_fast(&designs[1], &run(&designs[1])).unwrap();
    prop_assert!(f.warning == warned && f.s1.iter().all(|&x| x == 0.0));
    let r = analyze_rbd(&designs[2], &run(&designs[2])).unwrap();
    prop_assert!(r.warning == warned && r.s1.iter().all(|&x| x == 0.0));
    let mo = analyze_morris(&designs[3], &run(&designs[3])).unwrap();
    prop_assert!(mo.warning == warned && mo.mu_star.iter().chain(&mo.sigma).all(|&x| x == 0.0));
    let dg = analyze_dgsm(&designs[4], &run(&designs[4])).unwrap();
    prop_assert!(dg.warning == warned && dg.v.iter().all(|&x| x == 0.0));
    let de = analyze_delta(&designs[5], &run(&designs[5]), 16, 0).unwrap();
    prop_assert!(de.warning == warned && de.delta.iter().all(|&x| x == 0.0));
    Ok(())
}

fn criterion_11() -> Vec<Line> {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 100,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let strategy = (specs(), any::<u64>(), prop::collection::vec(-3.0f64..3.0, 6));
    let result = runner.run(&strategy, |(spec, seed, w)| property_case(&spec, seed, &w));
    vec![line(
        "11",
        result.is_ok(),
        match result {
            Ok(()) => "bounds, Morris structure, S1 <= ST, delta in [0,1], v >= 0, constant-model zeros: 100 random specs".into(),
            Err(e) => format!("property failure: {e}"),
        },
    )]
}

fn guarded(id: &'static str, f: impl FnOnce() -> Vec<Line>) -> Vec<Line> {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        vec![line(id, false, format!("panicked: {msg}"))]
    })
}

fn main() {
    let work = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();
    lines.extend(guarded("1", criterion_1));
    lines.extend(guarded("2", criterion_2));
    lines.extend(guarded("3", criterion_3));
    lines.extend(guarded("4", criterion_4));
    lines.extend(guarded("5", criterion_5));
    lines.extend(guarded("6", criterion_6));
    let mut study = None;
    lines.extend(guarded("7-9", || {
        let (l, s) = mnist_criteria(work.path());
        study = s;
        l
    }));
    lines.extend(guarded("10", || criterion_10(work.path(), study.as_ref())));
    lines.extend(guarded("11", criterion_11));

    println!();
    for l in &lines {
        println!(
            "acceptance criterion {:<3} {}  {}",
            l.id,
            if l.passed { "PASS" } else { "FAIL" },
            l.detail
        );
    }
    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        lines.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({})", failed.join(", "))
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
