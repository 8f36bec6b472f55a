//! Activation functions with derivatives up to third order.
//!
//! Third derivatives are needed by the reverse pass through second-order
//! jets: the adjoint of `σ''(z)·z_x²` with respect to `z` involves `σ'''`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

/// `(f, f', f'', f''')` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derivs<T> {
    pub f: T,
    pub d1: T,
    pub d2: T,
    pub d3: T,
}

/// Logistic function, evaluated without overflow for either sign.
#[inline]
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Sigmoid, Activation::Tanh, Activation::Relu];

    #[inline]
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Relu => {
                if z > T::zero() {
                    z
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Value and derivatives. ReLU takes slope 0 at the kink and zero
    /// curvature everywhere.
    #[inline]
    pub fn derivs<T: Scalar>(self, z: T) -> Derivs<T> {
        match self {
            Activation::Sigmoid => {
                // s(1-s) computed as s·σ(-z) keeps precision when s ≈ 1.
                let s = sigmoid(z);
                let sb = sigmoid(-z);
                let d1 = s * sb;
                let d2 = d1 * (sb - s);
                let d3 = d1 * (T::one() - T::lit(6.0) * d1);
                Derivs { f: s, d1, d2, d3 }
            }
            Activation::Tanh => {
                let th = z.tanh();
                let sech2 = T::one() - th * th;
                let d2 = T::lit(-2.0) * th * sech2;
                let d3 = sech2 * (T::lit(6.0) * th * th - T::lit(2.0));
                Derivs { f: th, d1: sech2, d2, d3 }
            }
            Activation::Relu => {
                let on = z > T::zero();
                Derivs {
                    f: if on { z } else { T::zero() },
                    d1: if on { T::one() } else { T::zero() },
                    d2: T::zero(),
                    d3: T::zero(),
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(format!("unknown activation `{other}` (expected sigmoid|tanh|relu)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sigmoid_at_zero_is_half() {
        assert_eq!(sigmoid(0.0_f64), 0.5);
        assert_eq!(sigmoid(0.0_f32), 0.5);
    }

    #[test]
    fn sigmoid_saturates_without_nan() {
        assert_eq!(sigmoid(-1e6_f64), 0.0);
        assert_eq!(sigmoid(1e6_f64), 1.0);
        let d = Activation::Sigmoid.derivs(800.0_f64);
        assert!(d.d1 >= 0.0 && d.d1.is_finite());
    }

    #[test]
    fn smooth_derivatives_match_finite_differences() {
        let h = 1e-4;
        for act in [Activation::Sigmoid, Activation::Tanh] {
            for &z in &[-2.3, -0.4, 0.0, 0.9, 3.1] {
                let d = act.derivs(z);
                let f = |v: f64| act.apply(v);
                let d1 = (f(z + h) - f(z - h)) / (2.0 * h);
                let g = |v: f64| act.derivs(v).d1;
                let d2 = (g(z + h) - g(z - h)) / (2.0 * h);
                let k = |v: f64| act.derivs(v).d2;
                let d3 = (k(z + h) - k(z - h)) / (2.0 * h);
                assert_relative_eq!(d.d1, d1, epsilon = 1e-8, max_relative = 1e-7);
                assert_relative_eq!(d.d2, d2, epsilon = 1e-8, max_relative = 1e-6);
                assert_relative_eq!(d.d3, d3, epsilon = 1e-8, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn relu_kink_has_zero_slope() {
        let d = Activation::Relu.derivs(0.0_f64);
        assert_eq!((d.f, d.d1, d.d2, d.d3), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(Activation::Relu.derivs(1e-300_f64).d1, 1.0);
        let d = Activation::Relu.derivs(-1e-12_f64);
        assert_eq!(d.d1, 0.0);
    }

    #[test]
    fn parse_names() {
        assert_eq!("ReLU".parse::<Activation>().unwrap(), Activation::Relu);
        assert!("swish".parse::<Activation>().is_err());
    }
}
