//! Plain gradient descent and Adam.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::ParamGrad;
use crate::mlp::MlpParams;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn default_lr(self) -> f64 {
        match self {
            OptimizerKind::Sgd => 1e-2,
            OptimizerKind::Adam => 1e-3,
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            _ => Err(format!("unknown optimizer '{s}' (expected sgd or adam)")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OptimError {
    #[error("gradient does not match the network shape")]
    Shape,
    #[error("update would make parameter {index} non-finite")]
    NonFinite { index: usize },
}

/// Adam moments and hyperparameters. `eps = 0` is allowed; a component whose
/// second moment is still zero then gets no update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(num_params: usize, beta1: T, beta2: T, eps: T) -> Self {
        Self { m: vec![T::zero(); num_params], v: vec![T::zero(); num_params], t: 0, beta1, beta2, eps }
    }

    pub fn standard(num_params: usize) -> Self {
        Self::new(num_params, T::lit(0.9), T::lit(0.999), T::lit(1e-8))
    }
}

fn commit<T: Scalar>(net: &mut MlpParams<T>, new: &[T]) -> Result<(), OptimError> {
    if let Some(index) = new.iter().position(|v| !v.is_finite()) {
        return Err(OptimError::NonFinite { index });
    }
    net.set_flat(new).map_err(|_| OptimError::Shape)
}

/// `θ ← θ − lr·g`. The network is left untouched if any entry would become
/// non-finite.
pub fn step_sgd<T: Scalar>(net: &mut MlpParams<T>, grad: &ParamGrad<T>, lr: T) -> Result<(), OptimError> {
    if !grad.is_congruent(net) {
        return Err(OptimError::Shape);
    }
    let new: Vec<T> = net.iter_params().zip(grad.iter()).map(|(p, g)| p - lr * g).collect();
    commit(net, &new)
}

/// One bias-corrected Adam step. On failure neither the network nor the
/// moments change.
pub fn step_adam<T: Scalar>(
    net: &mut MlpParams<T>,
    grad: &ParamGrad<T>,
    state: &mut AdamState<T>,
    lr: T,
) -> Result<(), OptimError> {
    if !grad.is_congruent(net) || state.m.len() != net.num_params() {
        return Err(OptimError::Shape);
    }
    let t = state.t + 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = T::one() - b1.powi(t.min(i32::MAX as u64) as i32);
    let c2 = T::one() - b2.powi(t.min(i32::MAX as u64) as i32);
    let mut m = state.m.clone();
    let mut v = state.v.clone();
    let mut new = Vec::with_capacity(m.len());
    for (i, (p, g)) in net.iter_params().zip(grad.iter()).enumerate() {
        m[i] = b1 * m[i] + (T::one() - b1) * g;
        v[i] = b2 * v[i] + (T::one() - b2) * g * g;
        let mh = m[i] / c1;
        let den = (v[i] / c2).sqrt() + state.eps;
        let step = if den == T::zero() { T::zero() } else { lr * mh / den };
        new.push(p - step);
    }
    commit(net, &new)?;
    state.m = m;
    state.v = v;
    state.t = t;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use approx::assert_relative_eq;

    fn scalar_net() -> (MlpParams<f64>, ParamGrad<f64>) {
        let net = MlpParams::<f64>::zeros(&[1, 1], Activation::Tanh).unwrap();
        let mut g = ParamGrad::zeros_like(&net);
        g.weights[0][0] = 1.0;
        (net, g)
    }

    #[test]
    fn sgd_example() {
        let (mut net, g) = scalar_net();
        step_sgd(&mut net, &g, 0.1).unwrap();
        assert_relative_eq!(net.layers[0].weights[0], -0.1);
        assert_eq!(net.layers[0].bias[0], 0.0);
    }

    #[test]
    fn adam_first_step_has_size_lr() {
        for g0 in [1e-6, 0.3, 250.0] {
            let (mut net, mut g) = scalar_net();
            g.weights[0][0] = g0;
            let mut st = AdamState::standard(net.num_params());
            step_adam(&mut net, &g, &mut st, 1e-3).unwrap();
            assert_relative_eq!(net.layers[0].weights[0], -1e-3, max_relative = 1e-2);
            assert_eq!(net.layers[0].bias[0], 0.0);
        }
    }

    #[test]
    fn zero_eps_with_zero_gradient_stays_put() {
        let (mut net, mut g) = scalar_net();
        g.weights[0][0] = 0.0;
        let mut st = AdamState::new(net.num_params(), 0.9, 0.999, 0.0);
        step_adam(&mut net, &g, &mut st, 1.0).unwrap();
        assert!(net.iter_params().all(|v| v == 0.0));
    }

    #[test]
    fn non_finite_update_is_rejected() {
        let (mut net, mut g) = scalar_net();
        g.weights[0][0] = f64::INFINITY;
        assert!(matches!(step_sgd(&mut net, &g, 1.0), Err(OptimError::NonFinite { .. })));
        let mut st = AdamState::standard(net.num_params());
        assert!(step_adam(&mut net, &g, &mut st, 1.0).is_err());
        assert_eq!(st.t, 0);
        assert!(net.iter_params().all(|v| v == 0.0));
    }
}
