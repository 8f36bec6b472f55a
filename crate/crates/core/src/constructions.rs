//! Explicit networks that approach step functions as their weights grow,
//! and a bounded sequence of normalized bumps with no convergent
//! subsequence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::Activation;
use crate::mlp::{Layer, MlpParams};
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ConstructionError {
    #[error("sharpness index must be at least 1")]
    ZeroN,
    #[error("box side {dim} is empty: [{lo}, {hi}]")]
    EmptySide { dim: usize, lo: f64, hi: f64 },
    #[error("box must have at least one dimension")]
    NoDims,
}

/// Sharpness `n` and the box `∏ [l_i, r_i]` whose indicator is approximated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StepWitness<T> {
    pub n: u64,
    pub sides: Vec<(T, T)>,
}

impl<T: Scalar> StepWitness<T> {
    pub fn new(n: u64, sides: Vec<(T, T)>) -> Result<Self, ConstructionError> {
        if n == 0 {
            return Err(ConstructionError::ZeroN);
        }
        if sides.is_empty() {
            return Err(ConstructionError::NoDims);
        }
        for (dim, &(lo, hi)) in sides.iter().enumerate() {
            if !(lo < hi) {
                return Err(ConstructionError::EmptySide { dim, lo: lo.to_f64_lossy(), hi: hi.to_f64_lossy() });
            }
        }
        Ok(Self { n, sides })
    }

    /// The unit interval in one dimension.
    pub fn unit(n: u64) -> Result<Self, ConstructionError> {
        Self::new(n, vec![(T::zero(), T::one())])
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }
}

/// Sigmoid network `[d, 2d, 1]` with sigmoid output. Hidden unit pairs
/// `σ(n(x_i − l_i))`, `σ(n(r_i − x_i))` are summed into `y`, and the output
/// is `σ(n·y − n(2d − ½))`: inside the box `y → 2d`, outside it drops by at
/// least one.
pub fn sigmoid_step_network<T: Scalar>(w: &StepWitness<T>) -> MlpParams<T> {
    let d = w.dim();
    let n = T::lit(w.n as f64);
    let mut hidden = Layer::zeros(d, 2 * d);
    for (i, &(lo, hi)) in w.sides.iter().enumerate() {
        hidden.weights[(2 * i) * d + i] = n;
        hidden.bias[2 * i] = -n * lo;
        hidden.weights[(2 * i + 1) * d + i] = -n;
        hidden.bias[2 * i + 1] = n * hi;
    }
    let mut out = Layer::zeros(2 * d, 1);
    out.weights.iter_mut().for_each(|v| *v = n);
    out.bias[0] = -n * (T::lit(2.0 * d as f64) - T::lit(0.5));
    MlpParams::from_layers(vec![hidden, out], Activation::Sigmoid, Some(Activation::Sigmoid))
        .expect("construction has consistent shapes")
}

/// ReLU network `[1, 4, 1]` approaching `χ_[0,1]` on `[−1, 1]`.
///
/// Two unit ramps `r_0 = σ(nx + ½) − σ(nx − ½)` (rising at 0) and
/// `r_1 = σ(−nx + n + ½) − σ(−nx + n − ½)` (falling at 1) are combined as
/// `σ(n(r_0 + r_1) − 2n + 1)`, which is 1 only where both ramps are
/// saturated.
pub fn relu_step_network<T: Scalar>(n: u64) -> Result<MlpParams<T>, ConstructionError> {
    if n == 0 {
        return Err(ConstructionError::ZeroN);
    }
    let nf = T::lit(n as f64);
    let half = T::lit(0.5);
    let hidden = Layer::from_parts(
        1,
        4,
        vec![nf, nf, -nf, -nf],
        vec![half, -half, nf + half, nf - half],
    );
    let out = Layer::from_parts(4, 1, vec![nf, -nf, nf, -nf], vec![T::one() - T::lit(2.0) * nf]);
    Ok(MlpParams::from_layers(vec![hidden, out], Activation::Relu, Some(Activation::Relu))
        .expect("construction has consistent shapes"))
}

/// `χ_[0,1]`.
pub fn unit_indicator<T: Scalar>(x: T) -> T {
    if x >= T::zero() && x <= T::one() {
        T::one()
    } else {
        T::zero()
    }
}

/// `‖f − χ_[0,1]‖` in `L²([−1, 1])`. The integrand is split at dyadic
/// distances from the jumps so that transition layers of any width down
/// to `2^-40` are resolved.
pub fn step_l2_error(f: impl Fn(f64) -> f64) -> f64 {
    let gl = GaussLegendre::new(16);
    let mut breaks = vec![0.0, 1.0];
    for k in 1..=40 {
        let h = 2f64.powi(-k);
        breaks.extend([-h, h, 1.0 - h, 1.0 + h]);
    }
    let sq = gl.piecewise(-1.0, 1.0, &breaks, 2, |x| {
        let e = f(x) - unit_indicator(x);
        e * e
    });
    sq.sqrt()
}

/// `φ_n`: constant on `(1 − 2^{1−n}, 1 − 2^{−n})`, zero elsewhere, with
/// height `2^{n/2}` so that `‖φ_n‖₂ = 1`. Held exactly rather than sampled so
/// norms and distances can be integrated in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiWitness {
    pub n: u32,
    pub lo: f64,
    pub hi: f64,
    pub height: f64,
}

pub fn phi_witness(n: u32) -> Result<PhiWitness, ConstructionError> {
    if n == 0 {
        return Err(ConstructionError::ZeroN);
    }
    let n_i = n as i32;
    Ok(PhiWitness {
        n,
        lo: 1.0 - 2f64.powi(1 - n_i),
        hi: 1.0 - 2f64.powi(-n_i),
        height: 2f64.powf(n as f64 / 2.0),
    })
}

impl PhiWitness {
    pub fn eval(&self, x: f64) -> f64 {
        if x > self.lo && x < self.hi {
            self.height
        } else {
            0.0
        }
    }

    pub fn support_len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn l2_norm(&self) -> f64 {
        (self.height * self.height * self.support_len()).sqrt()
    }

    /// `‖self − other‖₂` by exact integration of the piecewise-constant
    /// difference.
    pub fn l2_distance(&self, other: &PhiWitness) -> f64 {
        let mut cuts = [self.lo, self.hi, other.lo, other.hi];
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let sq: f64 = cuts
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let d = self.eval(mid) - other.eval(mid);
                d * d * (w[1] - w[0])
            })
            .sum();
        sq.sqrt()
    }

    pub fn disjoint_from(&self, other: &PhiWitness) -> bool {
        self.hi <= other.lo || other.hi <= self.lo
    }
}
