//! Design-matrix generators, one per analysis method.
//!
//! Every sampler is a pure function of its arguments and seed. The returned
//! [`SampleMatrix`] carries a [`Layout`] describing how rows relate to each
//! other; analyzers refuse matrices whose layout they cannot interpret.

mod balanced;
mod fast;
pub mod frequencies;
mod lhs;
mod lowdisc;
mod morris;
mod perturb;
mod saltelli;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::ProblemError;

pub use balanced::{balanced_sample, hybrid_fast_rbd_sample, rbd_sample, BalancedLayout, RbdConfig};
pub use fast::{fast_sample, FastConfig, FastFrequencies, FastLayout};
pub use lhs::latin_hypercube_sample;
pub use lowdisc::sobol_point;
pub use morris::{morris_sample, MorrisConfig, MorrisLayout, MorrisStep};
pub use perturb::{finite_difference_sample, reflected_step, FiniteDifferenceLayout};
pub use saltelli::{saltelli_sample, SaltelliLayout};

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("{what} must be at least {min}, got {got}")]
    TooSmall {
        what: &'static str,
        min: usize,
        got: usize,
    },
    #[error("{samples} samples cannot resolve harmonic {harmonics} of frequency {frequency}; need more than {required}")]
    Nyquist {
        samples: usize,
        harmonics: usize,
        frequency: u32,
        required: usize,
    },
    #[error("frequency interference: {0}")]
    Interference(String),
    #[error("{groups} groups requested for {factors} factors")]
    TooManyGroups { groups: usize, factors: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Which sampler produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Saltelli,
    Fast,
    Rbd,
    Hybrid,
    Morris,
    FiniteDifference,
    LatinHypercube,
    GivenData,
}

impl SamplerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Saltelli => "saltelli",
            Self::Fast => "fast",
            Self::Rbd => "rbd",
            Self::Hybrid => "hybrid",
            Self::Morris => "morris",
            Self::FiniteDifference => "finite_difference",
            Self::LatinHypercube => "latin_hypercube",
            Self::GivenData => "given_data",
        }
    }
}

/// Row structure imposed by a sampler.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// Independent rows with no further structure.
    GivenData,
    LatinHypercube,
    Saltelli(SaltelliLayout),
    Fast(FastLayout),
    /// RBD and hybrid FAST-RBD designs.
    Balanced(BalancedLayout),
    Morris(MorrisLayout),
    FiniteDifference(FiniteDifferenceLayout),
}

impl Layout {
    pub(crate) fn check(&self, rows: usize, cols: usize) -> Result<(), String> {
        match self {
            Layout::GivenData | Layout::LatinHypercube => Ok(()),
            Layout::Saltelli(l) => l.check(rows, cols),
            Layout::Fast(l) => l.check(rows, cols),
            Layout::Balanced(l) => l.check(rows, cols),
            Layout::Morris(l) => l.check(rows, cols),
            Layout::FiniteDifference(l) => l.check(rows, cols),
        }
    }
}

/// Search-curve transfer function on normalized coordinates.
///
/// `x = 1/2 + arcsin(sin(omega * s + phase)) / pi` gives uniform marginals
/// over [0, 1] when `s` sweeps a full period.
pub fn search_curve(omega: f64, s: f64, phase: f64) -> f64 {
    (0.5 + (omega * s + phase).sin().asin() / std::f64::consts::PI).clamp(0.0, 1.0)
}

/// Curve parameter of point `j` out of `n`: cell midpoints of (-pi, pi).
pub fn curve_parameter(j: usize, n: usize) -> f64 {
    use std::f64::consts::PI;
    -PI + PI * (2 * j + 1) as f64 / n as f64
}

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
