//! Finite machine precision modelled as an absolute underflow threshold,
//! and the single-neuron step-fitting error formulas.

use crate::autodiff::ParamGrad;
use crate::scalar::Scalar;

/// `2^{−p}`.
pub fn epsilon_bits(p: u32) -> f64 {
    2f64.powi(-(p as i32))
}

/// Sets every component with `|g| < 2^{−p}·reference` to exactly zero and
/// returns how many were flushed.
pub fn flush_gradient<T: Scalar>(grad: &mut ParamGrad<T>, p: u32, reference: T) -> usize {
    let thr = T::lit(epsilon_bits(p)) * reference;
    let mut count = 0;
    for block in grad.blocks_mut() {
        for g in block.iter_mut() {
            if g.abs() < thr && *g != T::zero() {
                *g = T::zero();
                count += 1;
            } else if g.abs() < thr {
                *g = T::zero();
            }
        }
    }
    count
}

/// Largest weight `w′ = (p − 1)·log 2 / Δx` a single sigmoid neuron can reach
/// on a grid of spacing `Δx` before every per-sample gradient underflows.
pub fn w_prime(p: u32, dx: f64) -> f64 {
    (p as f64 - 1.0) * std::f64::consts::LN_2 / dx
}

/// `√((2/w)(log(2/(1+e^{−w})) + 1 − 2/(1+e^{w})))`, the usual closed form
/// for the error of `σ(wx)` against `χ_[0,1]` on `[−1, 1]`. It overstates
/// the true error (see [`exact_sigmoid_step_error`]); for large `w` it tends
/// to `√(2(log 2 + 1)/w)`.
pub fn closed_form_error(w: f64) -> f64 {
    let log_term = std::f64::consts::LN_2 - (-w).exp().ln_1p();
    let tail = 2.0 * crate::activation::sigmoid(-w);
    ((2.0 / w) * (log_term + 1.0 - tail)).sqrt()
}

/// Exact `‖σ(w·) − χ_[0,1]‖` in `L²([−1, 1])`:
/// `√((2/w)(log(2/(1+e^{−w})) + 1/(1+e^{w}) − ½))`.
pub fn exact_sigmoid_step_error(w: f64) -> f64 {
    let log_term = std::f64::consts::LN_2 - (-w).exp().ln_1p();
    let tail = crate::activation::sigmoid(-w);
    ((2.0 / w) * (log_term + tail - 0.5)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::{sigmoid, Activation};
    use crate::constructions::step_l2_error;
    use crate::mlp::MlpParams;
    use approx::assert_relative_eq;

    #[test]
    fn flush_threshold() {
        let net = MlpParams::<f64>::zeros(&[1, 1], Activation::Sigmoid).unwrap();
        let mut g = ParamGrad::zeros_like(&net);
        g.weights[0][0] = 2f64.powi(-11);
        g.bias[0][0] = 2f64.powi(-9);
        assert_eq!(flush_gradient(&mut g, 10, 1.0), 1);
        assert_eq!(g.weights[0][0], 0.0);
        assert_eq!(g.bias[0][0], 2f64.powi(-9));
        g.bias[0][0] = -1e-9;
        flush_gradient(&mut g, 10, 1.0);
        assert!(g.is_zero());
    }

    #[test]
    fn w_prime_value() {
        assert_relative_eq!(w_prime(24, 0.1), 159.42385152878742, max_relative = 1e-9);
        assert_relative_eq!(w_prime(53, 0.01), 3604.365338911824, max_relative = 1e-12);
    }

    #[test]
    fn closed_forms() {
        assert_relative_eq!(closed_form_error(3604.0), 0.030652, max_relative = 1e-4);
        let w = 1e7;
        assert_relative_eq!(closed_form_error(w), (2.0 * (std::f64::consts::LN_2 + 1.0) / w).sqrt(), max_relative = 1e-9);
        for w in [3.0, 40.0, 700.0] {
            let q = step_l2_error(|x| sigmoid(w * x));
            assert_relative_eq!(exact_sigmoid_step_error(w), q, max_relative = 1e-10);
        }
    }
}
