//! Global sensitivity analysis toolkit.
//!
//! The workflow is always the same two-phase loop: a sampler builds a
//! [`SampleMatrix`] over a [`ProblemSpec`], the model is evaluated on every
//! row with [`evaluate_model`], and an analyzer turns the matched
//! (samples, outputs) pair into sensitivity indices.
//!
//! ```
//! use gsa_core::{analyzers, evaluate_model, samplers, testfuncs::Benchmark};
//!
//! let bench = Benchmark::ishigami(7.0, 0.1);
//! let samples = samplers::saltelli_sample(bench.spec(), 256, false, 1).unwrap();
//! let outputs = evaluate_model(bench.evaluator(), &samples).unwrap();
//! let indices = analyzers::analyze_sobol(&samples, &outputs, 20).unwrap();
//! assert_eq!(indices.s1.len(), 3);
//! ```
//!
//! Supported methods: Sobol (Saltelli design), extended FAST, RBD and the
//! hybrid FAST-RBD design, Morris elementary effects, DGSM and the
//! moment-independent delta measure.

pub mod analyzers;
pub mod external;
pub mod problem;
pub mod result;
pub mod samplers;
pub mod testfuncs;

mod stats;

pub use problem::{
    evaluate_model, model_fn, EvalError, FnModel, ModelError, ModelEvaluator, OutputVector,
    ProblemError, ProblemSpec, RowStore, SampleMatrix,
};
pub use result::SensitivityResult;
pub use samplers::{Layout, SamplerError, SamplerKind};
