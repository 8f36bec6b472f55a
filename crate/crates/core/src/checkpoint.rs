//! Versioned JSON checkpoints.
//!
//! ```json
//! {
//!   "format": "pinn-lab-checkpoint",
//!   "version": 1,
//!   "scalar": "f64",
//!   "sizes": [2, 64, 64, 1],
//!   "activation": "sigmoid",
//!   "output_activation": null,
//!   "params": [ ... ]
//! }
//! ```
//!
//! `params` is the flat parameter vector: for each layer, the row-major
//! weight matrix (`fan_out` rows of `fan_in`) followed by the bias. Floats are
//! written in shortest round-trip form, so reloading is bit exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::Activation;
use crate::mlp::{MlpError, MlpParams};
use crate::scalar::Scalar;

pub const FORMAT: &str = "pinn-lab-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a checkpoint (format tag `{0}`)")]
    Format(String),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error(transparent)]
    Shape(#[from] MlpError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub scalar: String,
    pub sizes: Vec<usize>,
    pub activation: Activation,
    pub output_activation: Option<Activation>,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn from_params<T: Scalar>(net: &MlpParams<T>) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            scalar: std::any::type_name::<T>().into(),
            sizes: net.sizes(),
            activation: net.activation,
            output_activation: net.output_activation,
            params: net.iter_params().map(|v| v.to_f64_lossy()).collect(),
        }
    }

    pub fn to_params<T: Scalar>(&self) -> Result<MlpParams<T>, CheckpointError> {
        if self.format != FORMAT {
            return Err(CheckpointError::Format(self.format.clone()));
        }
        if self.version != VERSION {
            return Err(CheckpointError::Version(self.version));
        }
        let mut net = MlpParams::<T>::zeros(&self.sizes, self.activation)?
            .with_output_activation(self.output_activation);
        let flat: Vec<T> = self.params.iter().map(|&v| T::lit(v)).collect();
        net.set_flat(&flat)?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CheckpointError> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn save<T: Scalar>(net: &MlpParams<T>, path: &Path) -> Result<(), CheckpointError> {
    fs::write(path, Checkpoint::from_params(net).to_json())?;
    Ok(())
}

pub fn load<T: Scalar>(path: &Path) -> Result<MlpParams<T>, CheckpointError> {
    Checkpoint::from_json(&fs::read_to_string(path)?)?.to_params()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = MlpParams::<f64>::init(&[2, 7, 3, 1], Activation::Tanh, 42)
            .unwrap()
            .with_output_activation(Some(Activation::Sigmoid));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("net.json");
        save(&net, &p).unwrap();
        let back: MlpParams<f64> = load(&p).unwrap();
        assert_eq!(back, net);
        for (a, b) in back.iter_params().zip(net.iter_params()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_foreign_or_damaged_files() {
        let net = MlpParams::<f64>::init(&[2, 3, 1], Activation::Relu, 1).unwrap();
        let mut c = Checkpoint::from_params(&net);
        c.version = 99;
        assert!(matches!(c.to_params::<f64>(), Err(CheckpointError::Version(99))));
        let mut c = Checkpoint::from_params(&net);
        c.params.pop();
        assert!(c.to_params::<f64>().is_err());
        assert!(Checkpoint::from_json(r#"{"format":"x"}"#).is_err());
    }
}
