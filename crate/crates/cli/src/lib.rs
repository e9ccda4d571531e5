//! Orchestration behind the `gsa` binary: configuration, benchmark
//! verification, the digit case study and comparison reports.

pub mod config;
pub mod run;
pub mod verify;

use std::path::{Path, PathBuf};

use gsa_core::analyzers::AnalyzerError;
use gsa_core::problem::EvalError;
use gsa_core::SamplerError;
use gsa_digits::casestudy::CaseStudyError;
use gsa_digits::{CnnError, MnistError};
use thiserror::Error;

pub use config::{BenchmarkId, Mode, RunConfig};
pub use run::{run_casestudy, run_report, CaseStudyOutcome, Manifest};
pub use verify::{run_verify, Check, VerifyReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown configuration keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("missing data files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingData(Vec<PathBuf>),
    #[error("no block evaluations found in {0}")]
    NoBlocks(PathBuf),
    #[error(transparent)]
    CaseStudy(#[from] CaseStudyError),
    #[error(transparent)]
    Mnist(#[from] MnistError),
    #[error(transparent)]
    Cnn(#[from] CnnError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
