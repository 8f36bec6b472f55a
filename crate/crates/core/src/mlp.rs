//! Fully connected networks: parameters, initialization and plain evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::Activation;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum MlpError {
    #[error("architecture needs at least an input and an output size, got {0:?}")]
    TooFewSizes(Vec<usize>),
    #[error("layer sizes must be positive, got {0:?}")]
    ZeroSize(Vec<usize>),
    #[error("layer {layer}: expected input of length {expected}, got {got}")]
    InputLength { layer: usize, expected: usize, got: usize },
    #[error("layer {layer}: weight matrix has {got} entries, expected {rows}x{cols}")]
    WeightShape { layer: usize, rows: usize, cols: usize, got: usize },
    #[error("layer {layer}: bias has length {got}, expected {expected}")]
    BiasShape { layer: usize, expected: usize, got: usize },
    #[error("flat parameter vector has length {got}, expected {expected}")]
    FlatLength { expected: usize, got: usize },
    #[error("non-finite parameter in layer {layer}")]
    NonFinite { layer: usize },
}

/// One affine map `z = W a + b`. `weights` is row-major, `fan_out` rows of
/// `fan_in` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Layer<T> {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![T::zero(); fan_in * fan_out],
            bias: vec![T::zero(); fan_out],
        }
    }

    pub fn from_parts(fan_in: usize, fan_out: usize, weights: Vec<T>, bias: Vec<T>) -> Self {
        Self { fan_in, fan_out, weights, bias }
    }

    #[inline]
    pub fn w(&self, row: usize, col: usize) -> T {
        self.weights[row * self.fan_in + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[T] {
        &self.weights[row * self.fan_in..(row + 1) * self.fan_in]
    }

    /// `z_j = (Σ_i W_ji a_i) + b_j`, summed left to right without fused
    /// multiply-add. The jet forward pass uses the same order so its value
    /// channel reproduces this bit for bit.
    pub fn affine_into(&self, a: &[T], z: &mut [T]) {
        for (j, zj) in z.iter_mut().enumerate().take(self.fan_out) {
            let mut acc = T::zero();
            for (w, &ai) in self.row(j).iter().zip(a) {
                acc = acc + *w * ai;
            }
            *zj = acc + self.bias[j];
        }
    }
}

/// A feed-forward network. Hidden layers apply `activation`; the last
/// layer applies `output_activation` when set and is linear otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MlpParams<T> {
    pub layers: Vec<Layer<T>>,
    pub activation: Activation,
    #[serde(default)]
    pub output_activation: Option<Activation>,
}

impl<T: Scalar> MlpParams<T> {
    /// Glorot-uniform weights, zero biases, deterministic per `seed`.
    pub fn init(sizes: &[usize], activation: Activation, seed: u64) -> Result<Self, MlpError> {
        check_sizes(sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| T::lit(rng.gen_range(-limit..=limit)))
                    .collect();
                Layer::from_parts(fan_in, fan_out, weights, vec![T::zero(); fan_out])
            })
            .collect();
        Ok(Self { layers, activation, output_activation: None })
    }

    /// All parameters zero.
    pub fn zeros(sizes: &[usize], activation: Activation) -> Result<Self, MlpError> {
        check_sizes(sizes)?;
        let layers = sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Self { layers, activation, output_activation: None })
    }

    pub fn with_output_activation(mut self, act: Option<Activation>) -> Self {
        self.output_activation = act;
        self
    }

    /// Builds from explicit layers after checking that shapes chain.
    pub fn from_layers(
        layers: Vec<Layer<T>>,
        activation: Activation,
        output_activation: Option<Activation>,
    ) -> Result<Self, MlpError> {
        let net = Self { layers, activation, output_activation };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        if self.layers.is_empty() {
            return Err(MlpError::TooFewSizes(vec![]));
        }
        for (k, l) in self.layers.iter().enumerate() {
            if l.fan_in == 0 || l.fan_out == 0 {
                return Err(MlpError::ZeroSize(self.sizes()));
            }
            if l.weights.len() != l.fan_in * l.fan_out {
                return Err(MlpError::WeightShape {
                    layer: k,
                    rows: l.fan_out,
                    cols: l.fan_in,
                    got: l.weights.len(),
                });
            }
            if l.bias.len() != l.fan_out {
                return Err(MlpError::BiasShape { layer: k, expected: l.fan_out, got: l.bias.len() });
            }
            if k > 0 && self.layers[k - 1].fan_out != l.fan_in {
                return Err(MlpError::InputLength {
                    layer: k,
                    expected: l.fan_in,
                    got: self.layers[k - 1].fan_out,
                });
            }
            if !l.weights.iter().chain(&l.bias).all(|v| v.is_finite()) {
                return Err(MlpError::NonFinite { layer: k });
            }
        }
        Ok(())
    }

    /// `[fan_in of first layer, fan_out of each layer...]`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.layers.len() + 1);
        if let Some(first) = self.layers.first() {
            s.push(first.fan_in);
        }
        s.extend(self.layers.iter().map(|l| l.fan_out));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.fan_in)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.fan_out)
    }

    pub fn widest(&self) -> usize {
        self.sizes().into_iter().max().unwrap_or(0)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Activation applied after layer `k`, if any.
    #[inline]
    pub fn activation_after(&self, k: usize) -> Option<Activation> {
        if k + 1 == self.layers.len() {
            self.output_activation
        } else {
            Some(self.activation)
        }
    }

    /// Network output for one input vector.
    pub fn eval_vec(&self, x: &[T]) -> Result<Vec<T>, MlpError> {
        if x.len() != self.input_dim() {
            return Err(MlpError::InputLength { layer: 0, expected: self.input_dim(), got: x.len() });
        }
        let mut a = x.to_vec();
        let mut z = Vec::new();
        for (k, layer) in self.layers.iter().enumerate() {
            z.clear();
            z.resize(layer.fan_out, T::zero());
            layer.affine_into(&a, &mut z);
            if let Some(act) = self.activation_after(k) {
                for v in z.iter_mut() {
                    *v = act.apply(*v);
                }
            }
            std::mem::swap(&mut a, &mut z);
        }
        Ok(a)
    }

    /// Scalar output; the network must have output dimension 1.
    pub fn eval(&self, x: &[T]) -> Result<T, MlpError> {
        if self.output_dim() != 1 {
            return Err(MlpError::InputLength {
                layer: self.layers.len(),
                expected: 1,
                got: self.output_dim(),
            });
        }
        Ok(self.eval_vec(x)?[0])
    }

    /// Largest absolute weight or bias.
    pub fn max_abs(&self) -> T {
        self.iter_params().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest absolute entry of the weight matrices, biases excluded.
    pub fn max_abs_weight(&self) -> T {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Euclidean norm of all parameters.
    pub fn norm(&self) -> T {
        self.iter_params().map(|v| v * v).sum::<T>().sqrt()
    }

    pub fn iter_params(&self) -> impl Iterator<Item = T> + '_ {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied())
    }

    /// Layer by layer, weights then bias.
    pub fn to_flat(&self) -> Vec<T> {
        self.iter_params().collect()
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<(), MlpError> {
        if flat.len() != self.num_params() {
            return Err(MlpError::FlatLength { expected: self.num_params(), got: flat.len() });
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    /// Mutable parameter blocks in flat order.
    pub fn blocks_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> MlpParams<U> {
        let conv = |v: &Vec<T>| v.iter().map(|x| U::lit(x.to_f64_lossy())).collect();
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::from_parts(l.fan_in, l.fan_out, conv(&l.weights), conv(&l.bias)))
                .collect(),
            activation: self.activation,
            output_activation: self.output_activation,
        }
    }
}

fn check_sizes(sizes: &[usize]) -> Result<(), MlpError> {
    if sizes.len() < 2 {
        return Err(MlpError::TooFewSizes(sizes.to_vec()));
    }
    if sizes.contains(&0) {
        return Err(MlpError::ZeroSize(sizes.to_vec()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic() {
        let a = MlpParams::<f64>::init(&[2, 4, 4, 1], Activation::Tanh, 0).unwrap();
        let b = MlpParams::<f64>::init(&[2, 4, 4, 1], Activation::Tanh, 0).unwrap();
        assert_eq!(a, b);
        let c = MlpParams::<f64>::init(&[2, 4, 4, 1], Activation::Tanh, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_shape_and_bounds() {
        let net = MlpParams::<f64>::init(&[2, 256, 256, 1], Activation::Sigmoid, 7).unwrap();
        assert_eq!(net.num_params(), 66_817);
        assert!(net.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        for l in &net.layers {
            let lim = (6.0 / (l.fan_in + l.fan_out) as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= lim));
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = MlpParams::<f64>::zeros(&[2, 3, 3, 1], Activation::Sigmoid).unwrap();
        assert_eq!(net.eval(&[0.3, 0.9]).unwrap(), 0.0);
    }

    #[test]
    fn single_sigmoid_neuron_at_origin() {
        let net = MlpParams::<f64>::zeros(&[1, 1], Activation::Sigmoid)
            .unwrap()
            .with_output_activation(Some(Activation::Sigmoid));
        assert_eq!(net.eval(&[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let net = MlpParams::<f64>::zeros(&[2, 3, 1], Activation::Tanh).unwrap();
        assert!(matches!(net.eval(&[1.0]), Err(MlpError::InputLength { .. })));
        let bad = vec![Layer::<f64>::zeros(2, 3), Layer::zeros(4, 1)];
        assert!(MlpParams::from_layers(bad, Activation::Tanh, None).is_err());
        assert!(MlpParams::<f64>::init(&[2, 0, 1], Activation::Tanh, 0).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let mut net = MlpParams::<f64>::init(&[2, 5, 1], Activation::Relu, 3).unwrap();
        let flat = net.to_flat();
        let copy = net.clone();
        net.set_flat(&vec![0.0; flat.len()]).unwrap();
        net.set_flat(&flat).unwrap();
        assert_eq!(net, copy);
    }

    #[test]
    fn f32_network_evaluates() {
        let net = MlpParams::<f32>::init(&[2, 8, 1], Activation::Tanh, 2).unwrap();
        assert!(net.eval(&[0.1, 0.2]).unwrap().is_finite());
        let wide: MlpParams<f64> = net.cast();
        assert!((wide.eval(&[0.1, 0.2]).unwrap() as f32 - net.eval(&[0.1, 0.2]).unwrap()).abs() < 1e-6);
    }
}
