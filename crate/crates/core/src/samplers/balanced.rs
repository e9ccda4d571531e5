//! Random balance designs: RBD and hybrid FAST-RBD.
//!
//! All factors in a group share one curve frequency. Each column of a group
//! with more than one member is scrambled by its own random permutation of the
//! curve points, so the factors decorrelate while every column still covers
//! the curve exactly once.

use rand::seq::SliceRandom;
use rand::Rng;

use super::frequencies::interference_free_set;
use super::{curve_parameter, search_curve, seeded_rng, Layout, SamplerError, SamplerKind};
use crate::problem::{ProblemSpec, SampleMatrix};

/// Smallest design the RBD estimator is trusted with.
pub const MIN_RBD_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct RbdConfig {
    pub samples: usize,
    /// Harmonics of the group frequency credited to a factor.
    pub harmonics: usize,
    pub groups: usize,
}

impl RbdConfig {
    pub fn new(samples: usize) -> Self {
        Self {
            samples,
            harmonics: 10,
            groups: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedLayout {
    pub samples: usize,
    pub harmonics: usize,
    pub phase: f64,
    /// Group index of every factor.
    pub group_of: Vec<usize>,
    pub group_frequencies: Vec<u32>,
    /// `permutations[i][row]` is the curve point used by column `i` at `row`.
    pub permutations: Vec<Vec<usize>>,
}

impl BalancedLayout {
    pub fn frequency(&self, factor: usize) -> u32 {
        self.group_frequencies[self.group_of[factor]]
    }

    pub(crate) fn check(&self, rows: usize, cols: usize) -> Result<(), String> {
        if rows != self.samples || cols != self.group_of.len() || cols != self.permutations.len() {
            return Err(format!(
                "{rows}x{cols} matrix for a {}-point design over {} factors",
                self.samples,
                self.group_of.len()
            ));
        }
        for (i, perm) in self.permutations.iter().enumerate() {
            let mut seen = vec![false; rows];
            for &p in perm {
                if p >= rows || std::mem::replace(&mut seen[p], true) {
                    return Err(format!("column {i} carries an invalid permutation"));
                }
            }
        }
        if self
            .group_of
            .iter()
            .any(|&g| g >= self.group_frequencies.len())
        {
            return Err("factor assigned to a missing group".into());
        }
        Ok(())
    }
}

/// Random balance design: one shared frequency, every column permuted.
pub fn rbd_sample(spec: &ProblemSpec, n: usize, seed: u64) -> Result<SampleMatrix, SamplerError> {
    balanced_sample(spec, &RbdConfig::new(n), seed)
}

/// Hybrid FAST-RBD: factors split into `groups` near-equal contiguous groups,
/// one interference-free frequency per group.
pub fn hybrid_fast_rbd_sample(
    spec: &ProblemSpec,
    n: usize,
    groups: usize,
    seed: u64,
) -> Result<SampleMatrix, SamplerError> {
    balanced_sample(
        spec,
        &RbdConfig {
            groups,
            ..RbdConfig::new(n)
        },
        seed,
    )
}

pub fn balanced_sample(
    spec: &ProblemSpec,
    config: &RbdConfig,
    seed: u64,
) -> Result<SampleMatrix, SamplerError> {
    let k = spec.num_factors();
    let n = config.samples;
    let g = config.groups;
    if n < MIN_RBD_SAMPLES {
        return Err(SamplerError::TooSmall {
            what: "RBD samples",
            min: MIN_RBD_SAMPLES,
            got: n,
        });
    }
    if g == 0 || g > k {
        return Err(SamplerError::TooManyGroups {
            groups: g,
            factors: k,
        });
    }
    if config.harmonics == 0 {
        return Err(SamplerError::InvalidConfig(
            "harmonics must be positive".into(),
        ));
    }
    let group_frequencies = interference_free_set(g, config.harmonics);
    let top = *group_frequencies.last().expect("g >= 1");
    let required = 2 * config.harmonics * top as usize;
    if n <= required {
        return Err(SamplerError::Nyquist {
            samples: n,
            harmonics: config.harmonics,
            frequency: top,
            required,
        });
    }
    // contiguous near-equal groups: the first k % g groups get one extra factor
    let (base, extra) = (k / g, k % g);
    let mut group_of = Vec::with_capacity(k);
    for grp in 0..g {
        let size = base + usize::from(grp < extra);
        group_of.extend(std::iter::repeat(grp).take(size));
    }
    let mut sizes = vec![0usize; g];
    for &grp in &group_of {
        sizes[grp] += 1;
    }

    let mut rng = seeded_rng(seed, 0);
    let phase = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let permutations: Vec<Vec<usize>> = group_of
        .iter()
        .map(|&grp| {
            let mut perm: Vec<usize> = (0..n).collect();
            if sizes[grp] > 1 {
                perm.shuffle(&mut rng);
            }
            perm
        })
        .collect();

    let mut values = vec![0.0; n * k];
    for (i, perm) in permutations.iter().enumerate() {
        let w = group_frequencies[group_of[i]] as f64;
        for (row, &point) in perm.iter().enumerate() {
            let s = curve_parameter(point, n);
            values[row * k + i] = spec.scale(i, search_curve(w, s, phase));
        }
    }
    let kind = if g == 1 {
        SamplerKind::Rbd
    } else {
        SamplerKind::Hybrid
    };
    let layout = BalancedLayout {
        samples: n,
        harmonics: config.harmonics,
        phase,
        group_of,
        group_frequencies,
        permutations,
    };
    Ok(SampleMatrix::new(
        spec,
        n,
        values,
        kind,
        seed,
        Layout::Balanced(layout),
    )?)
}
