//! Base points plus one-coordinate forward perturbations, for DGSM.

use super::{lowdisc::sobol_point, Layout, SamplerError, SamplerKind};
use crate::problem::{ProblemSpec, RowStore, SampleMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDifferenceLayout {
    pub base_n: usize,
    pub num_factors: usize,
    pub step_fraction: f64,
    /// Signed normalized step of every perturbed row, base-major.
    pub steps: Vec<f64>,
}

impl FiniteDifferenceLayout {
    pub fn base_row(&self, j: usize) -> usize {
        j * (self.num_factors + 1)
    }

    pub fn perturbed_row(&self, j: usize, factor: usize) -> usize {
        self.base_row(j) + 1 + factor
    }

    pub fn step(&self, j: usize, factor: usize) -> f64 {
        self.steps[j * self.num_factors + factor]
    }

    pub(crate) fn check(&self, rows: usize, cols: usize) -> Result<(), String> {
        if cols != self.num_factors
            || rows != self.base_n * (cols + 1)
            || self.steps.len() != self.base_n * cols
        {
            return Err(format!(
                "{rows}x{cols} matrix for {} base points",
                self.base_n
            ));
        }
        if self.steps.iter().any(|s| *s == 0.0 || !s.is_finite()) {
            return Err("zero or non-finite perturbation step".into());
        }
        Ok(())
    }
}

/// Normalized signed step for a base coordinate `unit` in [0, 1]: `+h`, or
/// `-h` when the forward step would leave the upper bound.
pub fn reflected_step(unit: f64, h: f64) -> f64 {
    if unit + h > 1.0 {
        -h
    } else {
        h
    }
}

/// `base_n` Sobol base points, each followed by its `k` perturbations.
pub fn finite_difference_sample(
    spec: &ProblemSpec,
    base_n: usize,
    step_fraction: f64,
    seed: u64,
) -> Result<SampleMatrix, SamplerError> {
    if !(step_fraction > 0.0 && step_fraction < 0.1) {
        return Err(SamplerError::InvalidConfig(format!(
            "step fraction must lie in (0, 0.1), got {step_fraction}"
        )));
    }
    if base_n == 0 || base_n > 1 << 16 {
        return Err(SamplerError::InvalidConfig(format!(
            "base_n must lie in 1..=65536, got {base_n}"
        )));
    }
    let k = spec.num_factors();
    let mut store = RowStore::new(k);
    let mut steps = Vec::with_capacity(base_n * k);
    for j in 0..base_n {
        let unit: Vec<f64> = (0..k).map(|i| sobol_point(j, i, seed)).collect();
        let base: Vec<f64> = unit
            .iter()
            .enumerate()
            .map(|(i, &u)| spec.scale(i, u))
            .collect();
        let base_row = store.push_dense(&base);
        for i in 0..k {
            let h = reflected_step(unit[i], step_fraction);
            store.push_patch(base_row, i, spec.scale(i, unit[i] + h));
            steps.push(h);
        }
    }
    let layout = FiniteDifferenceLayout {
        base_n,
        num_factors: k,
        step_fraction,
        steps,
    };
    Ok(SampleMatrix::from_store(
        spec,
        store,
        SamplerKind::FiniteDifference,
        seed,
        Layout::FiniteDifference(layout),
    )?)
}
