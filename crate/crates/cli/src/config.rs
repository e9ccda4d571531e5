//! Run configuration read from a TOML file.
//!
//! Top-level keys select the mode, methods, seed and output; each method
//! has its own section with case-study design sizes, and `[verify]` holds
//! the benchmark-scale sizes. Unknown keys anywhere are an error.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use gsa_core::testfuncs::Benchmark;
use gsa_digits::casestudy::{
    ClassifierConfig, DeltaSettings, DgsmSettings, FastSettings, Method, MorrisSettings, RbdSettings, SaConfig,
    SobolSettings, DEFAULT_BUDGET,
};
use gsa_digits::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Variable naming the base directory for relative data paths.
pub const DATA_DIR_VAR: &str = "GSA_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Verify,
    Casestudy,
    Report,
}

impl FromStr for Mode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verify" => Ok(Mode::Verify),
            "casestudy" => Ok(Mode::Casestudy),
            "report" => Ok(Mode::Report),
            other => Err(CliError::InvalidConfig(format!(
                "unknown mode `{other}` (expected verify, casestudy or report)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkId {
    /// Ishigami with a = 7, b = 0.1.
    Ishigami,
    /// g-function with a = [0, 1, 4.5, 9].
    SobolG,
    /// `2 x1 + x2` on the unit square.
    Linear,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 3] = [BenchmarkId::Ishigami, BenchmarkId::SobolG, BenchmarkId::Linear];
    pub const LINEAR_COEFFICIENTS: [f64; 2] = [2.0, 1.0];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkId::Ishigami => "ishigami",
            BenchmarkId::SobolG => "sobol_g",
            BenchmarkId::Linear => "linear",
        }
    }

    pub fn benchmark(self) -> Benchmark {
        match self {
            BenchmarkId::Ishigami => Benchmark::ishigami(7.0, 0.1),
            BenchmarkId::SobolG => Benchmark::sobol_g(&[0.0, 1.0, 4.5, 9.0]),
            BenchmarkId::Linear => Benchmark::linear(&Self::LINEAR_COEFFICIENTS, &[(0.0, 1.0); 2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Directory holding the four MNIST IDX files.
    pub dir: PathBuf,
    /// Trained-model cache: loaded when present, written after training
    /// otherwise. Without it the model is trained on every run.
    pub model: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("data/mnist"),
            model: None,
        }
    }
}

/// Design sizes for the benchmark runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub benchmarks: Vec<BenchmarkId>,
    pub sobol: SobolSettings,
    pub fast: FastSettings,
    pub rbd: RbdSettings,
    pub hybrid: RbdSettings,
    pub morris: MorrisSettings,
    pub dgsm: DgsmSettings,
    pub delta: DeltaSettings,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let sa = SaConfig::new();
        Self {
            benchmarks: BenchmarkId::ALL.to_vec(),
            sobol: SobolSettings {
                base_n: 1024,
                ..sa.sobol
            },
            fast: FastSettings {
                samples: 1024,
                ..sa.fast
            },
            rbd: RbdSettings {
                samples: 1024,
                ..sa.rbd
            },
            hybrid: RbdSettings {
                samples: 1024,
                ..sa.hybrid
            },
            morris: sa.morris,
            dgsm: DgsmSettings {
                base_n: 1024,
                ..sa.dgsm
            },
            delta: DeltaSettings {
                samples: 2048,
                ..sa.delta
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub mode: Mode,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub out: PathBuf,
    /// Most model evaluations one method may spend.
    pub budget: usize,
    /// Test images analysed per method.
    pub subset_n: usize,
    pub data: DataConfig,
    pub train: TrainConfig,
    pub classifier: ClassifierConfig,
    pub sobol: SobolSettings,
    pub fast: FastSettings,
    pub rbd: RbdSettings,
    pub hybrid: RbdSettings,
    pub morris: MorrisSettings,
    pub dgsm: DgsmSettings,
    pub delta: DeltaSettings,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sa = SaConfig::new();
        Self {
            mode: Mode::Casestudy,
            methods: Method::ALL.to_vec(),
            seed: 1,
            out: PathBuf::from("runs/latest"),
            budget: DEFAULT_BUDGET,
            subset_n: 16,
            data: DataConfig::default(),
            train: TrainConfig::default(),
            classifier: ClassifierConfig::default(),
            sobol: sa.sobol,
            fast: sa.fast,
            rbd: sa.rbd,
            hybrid: sa.hybrid,
            morris: sa.morris,
            dgsm: sa.dgsm,
            delta: sa.delta,
            verify: VerifyConfig::default(),
        }
    }
}

fn sizes(
    sobol: &SobolSettings,
    fast: &FastSettings,
    rbd: &RbdSettings,
    hybrid: &RbdSettings,
    morris: &MorrisSettings,
    dgsm: &DgsmSettings,
    delta: &DeltaSettings,
) -> SaConfig {
    SaConfig {
        sobol: sobol.clone(),
        fast: fast.clone(),
        rbd: rbd.clone(),
        hybrid: hybrid.clone(),
        morris: morris.clone(),
        dgsm: dgsm.clone(),
        delta: delta.clone(),
    }
}

fn check_sizes(section: &str, sa: &SaConfig) -> Result<(), CliError> {
    let counts = [
        ("sobol.base_n", sa.sobol.base_n),
        ("fast.samples", sa.fast.samples),
        ("fast.harmonics", sa.fast.harmonics),
        ("rbd.samples", sa.rbd.samples),
        ("rbd.harmonics", sa.rbd.harmonics),
        ("rbd.groups", sa.rbd.groups),
        ("hybrid.samples", sa.hybrid.samples),
        ("hybrid.harmonics", sa.hybrid.harmonics),
        ("hybrid.groups", sa.hybrid.groups),
        ("morris.trajectories", sa.morris.trajectories),
        ("morris.levels", sa.morris.levels),
        ("dgsm.base_n", sa.dgsm.base_n),
        ("delta.samples", sa.delta.samples),
    ];
    if let Some((key, _)) = counts.iter().find(|(_, v)| *v == 0) {
        return Err(CliError::InvalidConfig(format!("{section}{key} must be positive")));
    }
    if !(sa.dgsm.step > 0.0 && sa.dgsm.step < 1.0) {
        return Err(CliError::InvalidConfig(format!(
            "{section}dgsm.step must lie in (0, 1), got {}",
            sa.dgsm.step
        )));
    }
    if sa.delta.classes == Some(0) {
        return Err(CliError::InvalidConfig(format!("{section}delta.classes must be positive")));
    }
    Ok(())
}

impl RunConfig {
    /// Parses TOML text, reporting every unrecognised key at once.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let mut unknown = Vec::new();
        let de = toml::Deserializer::new(text);
        let config: RunConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
            .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        if !unknown.is_empty() {
            return Err(CliError::UnknownKeys(unknown));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.methods.is_empty() {
            return Err(CliError::InvalidConfig("method list is empty".into()));
        }
        if self.subset_n == 0 {
            return Err(CliError::InvalidConfig("subset_n must be positive".into()));
        }
        if self.budget == 0 {
            return Err(CliError::InvalidConfig("budget must be positive".into()));
        }
        if self.verify.benchmarks.is_empty() {
            return Err(CliError::InvalidConfig("verify.benchmarks is empty".into()));
        }
        check_sizes("", &self.sa_config())?;
        check_sizes("verify.", &self.verify_sizes())
    }

    /// Case-study design sizes.
    pub fn sa_config(&self) -> SaConfig {
        sizes(
            &self.sobol,
            &self.fast,
            &self.rbd,
            &self.hybrid,
            &self.morris,
            &self.dgsm,
            &self.delta,
        )
    }

    /// Benchmark design sizes.
    pub fn verify_sizes(&self) -> SaConfig {
        let v = &self.verify;
        sizes(&v.sobol, &v.fast, &v.rbd, &v.hybrid, &v.morris, &v.dgsm, &v.delta)
    }

    /// `path` itself when absolute, else joined to `$GSA_DATA_DIR` when set.
    pub fn resolve_data_path(path: &Path) -> PathBuf {
        match std::env::var_os(DATA_DIR_VAR) {
            Some(base) if path.is_relative() => PathBuf::from(base).join(path),
            _ => path.to_path_buf(),
        }
    }
}
