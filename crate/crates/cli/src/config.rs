//! The lab configuration file. Every section is optional and unknown keys
//! are rejected; `pinn-lab config --defaults` prints the full schema with
//! default values.

use std::path::{Path, PathBuf};

use pinn_core::training::TrainConfig;
use pinn_core::Activation;
use pinn_experiments::gradcheck::GradCheckConfig;
use pinn_experiments::refcheck::RefCheckConfig;
use pinn_experiments::{NetSpec, SuiteConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabConfig {
    /// Experiment run by `exp` when none is named: A, B, C, D1, D2, E or all.
    pub experiment: Option<String>,
    /// Overrides every training, sampling and initialization seed.
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub plots: bool,
    /// Worker threads; defaults to the number of cores.
    pub jobs: Option<usize>,
    pub problem: ProblemOverrides,
    pub train: TrainSection,
    pub experiments: SuiteConfig,
    pub gradcheck: GradCheckConfig,
    pub refcheck: RefCheckConfig,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: None,
            out_dir: PathBuf::from("out"),
            cache_dir: PathBuf::from("cache"),
            plots: true,
            jobs: None,
            problem: ProblemOverrides::default(),
            train: TrainSection::default(),
            experiments: SuiteConfig::default(),
            gradcheck: GradCheckConfig::default(),
            refcheck: RefCheckConfig::default(),
        }
    }
}

/// Coefficients used by `solve-ref` and `train`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemOverrides {
    pub transport_b: f64,
    pub transport_c: f64,
    pub burgers_mu: f64,
    pub burgers_nu: f64,
    pub nx: usize,
    pub nt: usize,
}

impl Default for ProblemOverrides {
    fn default() -> Self {
        Self { transport_b: 1.0, transport_c: 0.0, burgers_mu: -1.0, burgers_nu: 1e-3, nx: 201, nt: 101 }
    }
}

/// Network and optimizer for `train <problem>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub net: NetSpec,
    pub interior: usize,
    pub initial: usize,
    pub colloc_seed: u64,
    pub config: TrainConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            net: NetSpec { sizes: vec![2, 32, 32, 1], activation: Activation::Tanh, seed: 0 },
            interior: 2000,
            initial: 200,
            colloc_seed: 1,
            config: TrainConfig { steps: 2000, log_every: 50, ..TrainConfig::default() },
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl LabConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Replaces every seed with `seed`.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        let s = &mut self.experiments;
        s.b.net.seed = seed;
        s.b.train.seed = seed;
        s.b.colloc_seed = seed;
        s.d2.seed = seed;
        s.e.net.seed = seed;
        s.e.pinn_adam.seed = seed;
        s.e.pinn_sgd.seed = seed;
        s.e.data.seed = seed;
        s.e.colloc_seed = seed;
        s.e.data_seed = seed;
        self.gradcheck.seed = seed;
        self.train.net.seed = seed;
        self.train.config.seed = seed;
        self.train.colloc_seed = seed;
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(e) = &self.experiment {
            if !e.eq_ignore_ascii_case("all") {
                e.parse::<pinn_experiments::ExperimentId>().map_err(|e| ConfigError(e.to_string()))?;
            }
        }
        if self.jobs == Some(0) {
            return Err(ConfigError("jobs must be at least 1".into()));
        }
        self.train.config.validate().map_err(|e| ConfigError(format!("train.config: {e}")))?;
        Ok(())
    }
}
