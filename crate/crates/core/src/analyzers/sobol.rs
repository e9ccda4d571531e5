//! First, second and total order Sobol indices from a Saltelli design.
//!
//! Point estimators, with `V` the variance of the pooled A and B outputs:
//!
//! * `S1_i = mean(f_B (f_ABi - f_A)) / V`
//! * `ST_i = mean((f_A - f_ABi)^2) / (2 V)`
//! * `S2_ij = mean(f_BAi f_ABj - f_A f_B) / V - S1_i - S1_j`

use rand::Rng;
use rayon::prelude::*;

use super::{bootstrap_seed, check_pair, AnalyzerError, Warning};
use crate::problem::{OutputVector, SampleMatrix};
use crate::result::SensitivityResult;
use crate::samplers::{seeded_rng, Layout, SaltelliLayout};
use crate::stats::{is_degenerate, mean, percentile_half_width, variance};

#[derive(Debug, Clone, PartialEq)]
pub struct SobolIndices {
    pub s1: Vec<f64>,
    pub s1_conf: Vec<f64>,
    pub st: Vec<f64>,
    pub st_conf: Vec<f64>,
    /// Upper triangle (`i < j`) filled; present for second-order designs.
    pub s2: Option<Vec<Vec<f64>>>,
    pub s2_conf: Option<Vec<Vec<f64>>>,
    pub warning: Option<Warning>,
}

impl SobolIndices {
    pub fn to_result(&self, names: &[String]) -> SensitivityResult {
        let mut r = SensitivityResult::new("sobol", names)
            .with_index("S1", self.s1.clone(), Some(self.s1_conf.clone()))
            .with_index("ST", self.st.clone(), Some(self.st_conf.clone()));
        if let Some(s2) = &self.s2 {
            let k = names.len();
            for j in 0..k {
                let column: Vec<f64> = (0..k).map(|i| if i < j { s2[i][j] } else { 0.0 }).collect();
                let conf = self.s2_conf.as_ref().map(|c| {
                    (0..k)
                        .map(|i| if i < j { c[i][j] } else { 0.0 })
                        .collect::<Vec<_>>()
                });
                r = r.with_index(&format!("S2_with_{}", names[j]), column, conf);
            }
        }
        r.with_warning(self.warning)
    }
}

/// Outputs regrouped by Saltelli block.
struct Blocks {
    a: Vec<f64>,
    b: Vec<f64>,
    ab: Vec<Vec<f64>>,
    ba: Option<Vec<Vec<f64>>>,
}

impl Blocks {
    fn gather(layout: &SaltelliLayout, y: &[f64]) -> Self {
        let n = layout.base_n;
        let k = layout.num_factors;
        let a = (0..n).map(|j| y[layout.a(j)]).collect();
        let b = (0..n).map(|j| y[layout.b(j)]).collect();
        let ab = (0..k)
            .map(|i| (0..n).map(|j| y[layout.ab(j, i)]).collect())
            .collect();
        let ba = layout.second_order.then(|| {
            (0..k)
                .map(|i| (0..n).map(|j| y[layout.ba(j, i)]).collect())
                .collect()
        });
        Self { a, b, ab, ba }
    }
}

struct Estimate {
    s1: Vec<f64>,
    st: Vec<f64>,
    s2: Option<Vec<Vec<f64>>>,
}

fn estimate(blocks: &Blocks, rows: &[usize]) -> Option<Estimate> {
    let k = blocks.ab.len();
    let fa: Vec<f64> = rows.iter().map(|&j| blocks.a[j]).collect();
    let fb: Vec<f64> = rows.iter().map(|&j| blocks.b[j]).collect();
    let pooled: Vec<f64> = fa.iter().chain(&fb).copied().collect();
    let v = variance(&pooled);
    if is_degenerate(v, &pooled) {
        return None;
    }
    let n = rows.len() as f64;
    let mut s1 = vec![0.0; k];
    let mut st = vec![0.0; k];
    for i in 0..k {
        let ab = &blocks.ab[i];
        let (mut first, mut total) = (0.0, 0.0);
        for (r, &j) in rows.iter().enumerate() {
            let d = ab[j] - fa[r];
            first += fb[r] * d;
            total += d * d;
        }
        s1[i] = first / n / v;
        st[i] = 0.5 * total / n / v;
    }
    let s2 = blocks.ba.as_ref().map(|ba| {
        let mut s2 = vec![vec![0.0; k]; k];
        let base: Vec<f64> = fa.iter().zip(&fb).map(|(a, b)| a * b).collect();
        for i in 0..k {
            for j in (i + 1)..k {
                let vij = mean(
                    &rows
                        .iter()
                        .enumerate()
                        .map(|(r, &row)| ba[i][row] * blocks.ab[j][row] - base[r])
                        .collect::<Vec<_>>(),
                );
                s2[i][j] = vij / v - s1[i] - s1[j];
            }
        }
        s2
    });
    Some(Estimate { s1, st, s2 })
}

/// Sobol indices with bootstrap half-widths over `bootstrap_n` resamples of
/// the base rows.
pub fn analyze_sobol(
    samples: &SampleMatrix,
    outputs: &OutputVector,
    bootstrap_n: usize,
) -> Result<SobolIndices, AnalyzerError> {
    check_pair(samples, outputs)?;
    let Layout::Saltelli(layout) = samples.layout() else {
        return Err(AnalyzerError::WrongLayout {
            analyzer: "Sobol",
            expected: "Saltelli",
            got: samples.kind(),
        });
    };
    let k = layout.num_factors;
    let n = layout.base_n;
    let blocks = Blocks::gather(layout, &outputs.values);
    let all: Vec<usize> = (0..n).collect();
    let Some(point) = estimate(&blocks, &all) else {
        let zeros = vec![0.0; k];
        let zeros2 = layout.second_order.then(|| vec![vec![0.0; k]; k]);
        return Ok(SobolIndices {
            s1: zeros.clone(),
            s1_conf: zeros.clone(),
            st: zeros.clone(),
            st_conf: zeros,
            s2: zeros2.clone(),
            s2_conf: zeros2,
            warning: Some(Warning::ConstantOutput),
        });
    };

    let seed = bootstrap_seed(samples, 0x5081);
    let replicates: Vec<Estimate> = (0..bootstrap_n)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = seeded_rng(seed, b as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            estimate(&blocks, &rows)
        })
        .collect();
    let half_width = |get: &dyn Fn(&Estimate) -> f64| -> f64 {
        let xs: Vec<f64> = replicates.iter().map(get).collect();
        percentile_half_width(&xs)
    };
    let s1_conf = (0..k).map(|i| half_width(&|e| e.s1[i])).collect();
    let st_conf = (0..k).map(|i| half_width(&|e| e.st[i])).collect();
    let s2_conf = point.s2.as_ref().map(|_| {
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        if i < j {
                            half_width(&|e| e.s2.as_ref().map_or(0.0, |s| s[i][j]))
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    });
    Ok(SobolIndices {
        s1: point.s1,
        s1_conf,
        st: point.st,
        st_conf,
        s2: point.s2,
        s2_conf,
        warning: None,
    })
}
