//! Numerical experiments on PINN failure modes. Each experiment returns an
//! [`ExperimentReport`] of metrics, series and pass/fail verdicts and can
//! write CSV, JSON and SVG artifacts alongside.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use pinn_core::constructions::ConstructionError;
use pinn_core::field::FieldError;
use pinn_core::solvers::burgers::BurgersError;
use pinn_core::solvers::heat::HeatError;
use pinn_core::training::TrainError;
use pinn_core::{Activation, AutodiffError, Mlp, MlpError, MlpParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod artifacts;
pub mod cache;
pub mod exp_a;
pub mod exp_b;
pub mod exp_c;
pub mod exp_d1;
pub mod exp_d2;
pub mod exp_e;
pub mod gradcheck;
pub mod plot;
pub mod refcheck;
pub mod render;
pub mod report;
pub mod stats;

pub use artifacts::Artifacts;
pub use cache::{CacheError, ReferenceCache};
pub use report::{Comparison, ExperimentReport, Outcome, Verdict};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("i/o at {0}: {1}")]
    Io(String, String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Burgers(#[from] BurgersError),
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Problem(#[from] pinn_core::problems::ProblemError),
}

impl ExperimentError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io(path.display().to_string(), e.to_string())
    }
}

/// Layer sizes, activation and initialization seed of a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSpec {
    pub sizes: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

impl NetSpec {
    pub fn build(&self) -> Result<Mlp, ExperimentError> {
        Ok(MlpParams::init(&self.sizes, self.activation, self.seed)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExperimentId {
    A,
    B,
    C,
    D1,
    D2,
    E,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [Self::A, Self::B, Self::C, Self::D1, Self::D2, Self::E];

    pub fn name(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
            Self::D1 => "D1",
            Self::D2 => "D2",
            Self::E => "E",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment {s:?}; expected one of A, B, C, D1, D2, E")))
    }
}

/// Configuration of every experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub a: exp_a::AConfig,
    pub b: exp_b::BConfig,
    pub c: exp_c::CConfig,
    pub d1: exp_d1::D1Config,
    pub d2: exp_d2::D2Config,
    pub e: exp_e::EConfig,
}

pub fn run_experiment(
    id: ExperimentId,
    cfg: &SuiteConfig,
    cache: &ReferenceCache,
    out: &Artifacts,
) -> Result<ExperimentReport, ExperimentError> {
    match id {
        ExperimentId::A => exp_a::run(&cfg.a, out),
        ExperimentId::B => exp_b::run(&cfg.b, out),
        ExperimentId::C => exp_c::run(&cfg.c, cache, out),
        ExperimentId::D1 => exp_d1::run(&cfg.d1, out),
        ExperimentId::D2 => exp_d2::run(&cfg.d2, out),
        ExperimentId::E => exp_e::run(&cfg.e, cache, out),
    }
}

pub fn exp_a_nonuniqueness() -> Result<ExperimentReport, ExperimentError> {
    exp_a::run(&exp_a::AConfig::default(), &Artifacts::none())
}

pub fn exp_b_characteristics(train: pinn_core::training::TrainConfig) -> Result<ExperimentReport, ExperimentError> {
    exp_b::run(&exp_b::BConfig { train, ..Default::default() }, &Artifacts::none())
}

pub fn exp_c_nonlocality(amplitudes: Vec<f64>) -> Result<ExperimentReport, ExperimentError> {
    exp_c::run(&exp_c::CConfig { amplitudes, ..Default::default() }, &ReferenceCache::disabled(), &Artifacts::none())
}

pub fn exp_d1_step_limits(ns: Vec<u64>) -> Result<ExperimentReport, ExperimentError> {
    exp_d1::run(&exp_d1::D1Config { ns, ..Default::default() }, &Artifacts::none())
}

pub fn exp_d2_precision_floor(ps: Vec<u32>, dxs: Vec<f64>) -> Result<ExperimentReport, ExperimentError> {
    exp_d2::run(&exp_d2::D2Config { ps, dxs, ..Default::default() }, &Artifacts::none())
}

pub fn exp_e_burgers(
    pinn: pinn_core::training::TrainConfig,
    data: pinn_core::training::TrainConfig,
    widths: Vec<usize>,
    depths: Vec<usize>,
    cache: &ReferenceCache,
) -> Result<ExperimentReport, ExperimentError> {
    let cfg = exp_e::EConfig { pinn_adam: pinn, data, widths, depths, ..Default::default() };
    exp_e::run(&cfg, cache, &Artifacts::none())
}
