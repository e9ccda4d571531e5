//! Sensitivity estimators for every supported design.
//!
//! Each analyzer consumes a matched `(SampleMatrix, OutputVector)` pair and
//! checks that the matrix carries the layout it needs. A constant output makes
//! every ratio 0/0; analyzers then return all-zero indices with
//! [`Warning::ConstantOutput`] rather than failing.

mod delta;
mod dgsm;
mod fast;
mod morris;
mod rbd;
mod sobol;
mod spectrum;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{OutputVector, SampleMatrix};
use crate::samplers::SamplerKind;

pub use delta::{analyze_delta, default_classes, DeltaIndices};
pub use dgsm::{analyze_dgsm, DgsmIndices};
pub use fast::{analyze_fast, FastIndices};
pub use morris::{analyze_morris, MorrisIndices};
pub use rbd::analyze_rbd;
pub use sobol::{analyze_sobol, SobolIndices};

/// Resamples used for confidence intervals unless a caller says otherwise.
pub const DEFAULT_BOOTSTRAP: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyzerError {
    #[error("outputs were not produced from this sample matrix")]
    UnpairedOutputs,
    #[error("{outputs} outputs for {rows} sample rows")]
    LengthMismatch { rows: usize, outputs: usize },
    #[error("{analyzer} needs a {expected} design, got {got:?}")]
    WrongLayout {
        analyzer: &'static str,
        expected: &'static str,
        got: SamplerKind,
    },
    #[error("at least 2 trajectories are needed for a standard deviation, got {0}")]
    TooFewTrajectories(usize),
    #[error("{samples} samples are too few for {classes} classes (need {needed}); try classes <= {suggested}")]
    TooFewSamples {
        samples: usize,
        classes: usize,
        needed: usize,
        suggested: usize,
    },
    #[error("non-finite output at row {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    /// The model output never varied; all indices were set to zero.
    ConstantOutput,
}

impl Warning {
    pub fn as_str(self) -> &'static str {
        match self {
            Warning::ConstantOutput => "constant_output",
        }
    }
}

fn check_pair(samples: &SampleMatrix, outputs: &OutputVector) -> Result<(), AnalyzerError> {
    if outputs.len() != samples.rows() {
        return Err(AnalyzerError::LengthMismatch {
            rows: samples.rows(),
            outputs: outputs.len(),
        });
    }
    if outputs.sample_id != samples.id() {
        return Err(AnalyzerError::UnpairedOutputs);
    }
    if let Some(row) = outputs.values.iter().position(|y| !y.is_finite()) {
        return Err(AnalyzerError::NonFinite(row));
    }
    Ok(())
}

fn bootstrap_seed(samples: &SampleMatrix, salt: u64) -> u64 {
    samples.seed() ^ samples.id().rotate_left(17) ^ salt
}
