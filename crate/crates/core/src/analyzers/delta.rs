//! Moment-independent delta index from given data.
//!
//! Rows are split into equal-frequency classes along each factor; within a
//! class the output histogram is compared with the unconditional one and
//! `delta_i = 1/2 sum_c (n_c / N) |p_c - p|_1`. Output bins are quantile bins
//! of the pooled output, which makes the estimator depend on outputs only
//! through their ranks, so any strictly increasing transform of the output
//! leaves it unchanged.
//!
//! Finite classes put a positive floor under the raw statistic even for an
//! irrelevant factor. That floor is measured directly by applying the same
//! estimator to random class assignments and is subtracted before clamping
//! to [0, 1].

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{bootstrap_seed, check_pair, AnalyzerError, Warning};
use crate::problem::{OutputVector, SampleMatrix};
use crate::result::SensitivityResult;
use crate::samplers::seeded_rng;

const NULL_PARTITIONS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaIndices {
    pub delta: Vec<f64>,
    pub conf: Vec<f64>,
    pub warning: Option<Warning>,
}

impl DeltaIndices {
    pub fn to_result(&self, names: &[String]) -> SensitivityResult {
        SensitivityResult::new("delta", names)
            .with_index("delta", self.delta.clone(), Some(self.conf.clone()))
            .with_warning(self.warning)
    }
}

/// `floor(min(48, n / 16))` classes.
pub fn default_classes(n: usize) -> usize {
    (n / 16).min(48)
}

/// Rank of every value, ties sharing the lowest rank of their run.
fn min_ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0; values.len()];
    let mut run_start = 0;
    for (pos, &row) in order.iter().enumerate() {
        if pos > 0 && values[row] != values[order[pos - 1]] {
            run_start = pos;
        }
        ranks[row] = run_start;
    }
    ranks
}

struct OutputBins {
    ranks: Vec<usize>,
    /// Unconditional bin counts keyed by bin count `m`.
    pooled: Vec<(usize, Vec<usize>)>,
}

impl OutputBins {
    fn new(y: &[f64], classes: usize) -> Self {
        let ranks = min_ranks(y);
        let n = y.len();
        let mut widths: Vec<usize> = [n / classes, n.div_ceil(classes)]
            .iter()
            .map(|&c| bins_for(c))
            .collect();
        widths.dedup();
        let pooled = widths
            .into_iter()
            .map(|m| {
                let mut counts = vec![0; m];
                for &r in &ranks {
                    counts[r * m / n] += 1;
                }
                (m, counts)
            })
            .collect();
        Self { ranks, pooled }
    }

    /// Raw statistic for rows already ordered so that consecutive runs form
    /// the classes.
    fn statistic(&self, ordered_rows: &[usize], classes: usize, scratch: &mut Vec<usize>) -> f64 {
        let n = ordered_rows.len();
        let mut total = 0.0;
        let mut start = 0;
        for c in 0..classes {
            let end = (c + 1) * n / classes;
            let members = &ordered_rows[start..end];
            let n_c = members.len();
            let m = bins_for(n_c);
            let pooled = &self
                .pooled
                .iter()
                .find(|(w, _)| *w == m)
                .expect("bin width precomputed")
                .1;
            scratch.clear();
            scratch.resize(m, 0);
            for &row in members {
                scratch[self.ranks[row] * m / n] += 1;
            }
            let l1: f64 = scratch
                .iter()
                .zip(pooled)
                .map(|(&a, &b)| (a as f64 / n_c as f64 - b as f64 / n as f64).abs())
                .sum();
            total += n_c as f64 / n as f64 * l1;
            start = end;
        }
        0.5 * total
    }
}

fn bins_for(class_size: usize) -> usize {
    ((class_size as f64).sqrt().ceil() as usize).max(1)
}

fn rows_by_factor(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    order
}

fn null_floor(bins: &OutputBins, n: usize, classes: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed, 0xde17a);
    let mut rows: Vec<usize> = (0..n).collect();
    let mut scratch = Vec::new();
    let mut sum = 0.0;
    for _ in 0..NULL_PARTITIONS {
        rows.shuffle(&mut rng);
        sum += bins.statistic(&rows, classes, &mut scratch);
    }
    sum / NULL_PARTITIONS as f64
}

fn estimate(columns: &[Vec<f64>], bins: &OutputBins, classes: usize, floor: f64) -> Vec<f64> {
    columns
        .par_iter()
        .map_init(Vec::new, |scratch, x| {
            let raw = bins.statistic(&rows_by_factor(x), classes, scratch);
            (raw - floor).clamp(0.0, 1.0)
        })
        .collect()
}

/// Delta indices from any design whose rows can be read as independent
/// draws; `classes` per factor, `bootstrap_n` resamples for the half-widths.
pub fn analyze_delta(
    samples: &SampleMatrix,
    outputs: &OutputVector,
    classes: usize,
    bootstrap_n: usize,
) -> Result<DeltaIndices, AnalyzerError> {
    check_pair(samples, outputs)?;
    let n = samples.rows();
    let k = samples.cols();
    if classes == 0 || n < 16 * classes {
        return Err(AnalyzerError::TooFewSamples {
            samples: n,
            classes,
            needed: 16 * classes.max(1),
            suggested: default_classes(n),
        });
    }
    let y = &outputs.values;
    if crate::stats::is_degenerate(crate::stats::variance(y), y) {
        return Ok(DeltaIndices {
            delta: vec![0.0; k],
            conf: vec![0.0; k],
            warning: Some(Warning::ConstantOutput),
        });
    }
    let columns: Vec<Vec<f64>> = (0..k).map(|i| samples.column(i).collect()).collect();
    let seed = bootstrap_seed(samples, 0xd);
    let bins = OutputBins::new(y, classes);
    let floor = null_floor(&bins, n, classes, seed);
    let delta = estimate(&columns, &bins, classes, floor);

    let mut replicates: Vec<Vec<f64>> = Vec::with_capacity(bootstrap_n);
    for b in 0..bootstrap_n {
        let mut rng = seeded_rng(seed, b as u64 + 1);
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
        let xs: Vec<Vec<f64>> = columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        replicates.push(estimate(
            &xs,
            &OutputBins::new(&ys, classes),
            classes,
            floor,
        ));
    }
    let conf = (0..k)
        .map(|i| {
            let xs: Vec<f64> = replicates.iter().map(|r| r[i]).collect();
            crate::stats::percentile_half_width(&xs)
        })
        .collect();
    Ok(DeltaIndices {
        delta,
        conf,
        warning: None,
    })
}
