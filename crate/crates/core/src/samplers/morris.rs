//! Morris one-at-a-time trajectories on a `p`-level grid.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{seeded_rng, Layout, SamplerError, SamplerKind};
use crate::problem::{ProblemSpec, RowStore, SampleMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorrisConfig {
    pub trajectories: usize,
    pub levels: usize,
}

impl Default for MorrisConfig {
    /// 50 trajectories on a 4-level grid.
    fn default() -> Self {
        Self {
            trajectories: 50,
            levels: 4,
        }
    }
}

impl MorrisConfig {
    /// Step size on the unit interval, `p / (2 (p - 1))`.
    pub fn delta(&self) -> f64 {
        self.levels as f64 / (2.0 * (self.levels as f64 - 1.0))
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.levels < 2 || self.levels % 2 != 0 {
            return Err(SamplerError::InvalidConfig(format!(
                "levels must be an even integer >= 2, got {}",
                self.levels
            )));
        }
        if self.trajectories == 0 {
            return Err(SamplerError::TooSmall {
                what: "trajectories",
                min: 1,
                got: 0,
            });
        }
        Ok(())
    }
}

/// One move inside a trajectory: `factor` changed by `sign * delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorrisStep {
    pub factor: usize,
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorrisLayout {
    pub trajectories: usize,
    pub num_factors: usize,
    pub levels: usize,
    /// Normalized step size.
    pub delta: f64,
    /// `k` steps per trajectory, trajectory-major.
    pub steps: Vec<MorrisStep>,
}

impl MorrisLayout {
    /// First row of trajectory `t`; the trajectory spans `k + 1` rows.
    pub fn start(&self, t: usize) -> usize {
        t * (self.num_factors + 1)
    }

    pub fn trajectory_steps(&self, t: usize) -> &[MorrisStep] {
        &self.steps[t * self.num_factors..(t + 1) * self.num_factors]
    }

    pub(crate) fn check(&self, rows: usize, cols: usize) -> Result<(), String> {
        if cols != self.num_factors
            || rows != self.trajectories * (cols + 1)
            || self.steps.len() != self.trajectories * cols
        {
            return Err(format!(
                "{rows}x{cols} matrix for {} trajectories of {} factors",
                self.trajectories, self.num_factors
            ));
        }
        Ok(())
    }
}

/// Draws `r` trajectories of `k + 1` points.
///
/// The base point takes levels in `{0, 1/(p-1), .., 1 - delta}` so both
/// `x` and `x + delta` stay on the grid. Each factor moves exactly once per
/// trajectory, in random order and random direction.
pub fn morris_sample(
    spec: &ProblemSpec,
    config: &MorrisConfig,
    seed: u64,
) -> Result<SampleMatrix, SamplerError> {
    config.validate()?;
    let k = spec.num_factors();
    let p = config.levels;
    let delta = config.delta();
    // levels below 1 - delta: indices 0 ..= p/2 - 1
    let base_levels = p / 2;
    let mut rng = seeded_rng(seed, 1);
    let mut store = RowStore::new(k);
    let mut steps = Vec::with_capacity(config.trajectories * k);
    let mut order: Vec<usize> = (0..k).collect();
    for _ in 0..config.trajectories {
        let base: Vec<f64> = (0..k)
            .map(|_| rng.random_range(0..base_levels) as f64 / (p - 1) as f64)
            .collect();
        let up: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
        order.shuffle(&mut rng);
        let mut point: Vec<f64> = base
            .iter()
            .zip(&up)
            .map(|(&b, &u)| if u { b } else { b + delta })
            .collect();
        let start: Vec<f64> = point
            .iter()
            .enumerate()
            .map(|(i, &u)| spec.scale(i, u))
            .collect();
        let mut prev = store.push_dense(&start);
        for &i in &order {
            let sign = if up[i] { 1.0 } else { -1.0 };
            point[i] = if up[i] { base[i] + delta } else { base[i] };
            steps.push(MorrisStep { factor: i, sign });
            prev = store.push_patch(prev, i, spec.scale(i, point[i]));
        }
    }
    let layout = MorrisLayout {
        trajectories: config.trajectories,
        num_factors: k,
        levels: p,
        delta,
        steps,
    };
    Ok(SampleMatrix::from_store(
        spec,
        store,
        SamplerKind::Morris,
        seed,
        Layout::Morris(layout),
    )?)
}
