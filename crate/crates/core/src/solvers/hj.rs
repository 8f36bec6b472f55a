//! The one-parameter family of Lipschitz a.e. solutions of
//! `u_t + u_x² = 0`, `u(x, 0) = 0`:
//!
//! ```text
//! u_a(x, t) =  0             |x| ≥ a t
//!              a x − a² t     0 ≤ x ≤ a t
//!             −a x − a² t    −a t ≤ x ≤ 0
//! ```

use crate::field::{FieldError, FieldMeta, Grid1, SolutionField};
use crate::jet::Jet2;
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;

pub fn hj_value<T: Scalar>(a: T, x: T, t: T) -> T {
    hj_jet(a, x, t).val
}

/// Value and derivatives of `u_a`. On the kink lines the branch with
/// `|x| ≥ at` or `x ≥ 0` is used.
pub fn hj_jet<T: Scalar>(a: T, x: T, t: T) -> Jet2<T> {
    let at = a * t;
    if x.abs() >= at {
        Jet2::zero()
    } else if x >= T::zero() {
        Jet2::new(a * x - a * a * t, a, -a * a, T::zero())
    } else {
        Jet2::new(-a * x - a * a * t, -a, -a * a, T::zero())
    }
}

/// Whether `(x, t)` is within `tol` of a line where `u_a` is not
/// differentiable (`x = 0` or `|x| = at`, for `a > 0`).
pub fn near_kink<T: Scalar>(a: T, x: T, t: T, tol: T) -> bool {
    if a == T::zero() {
        return false;
    }
    x.abs() <= tol || (x.abs() - a * t).abs() <= tol
}

pub fn hj_family<T: Scalar>(a: T, x: Grid1, t: Grid1) -> Result<SolutionField<T>, FieldError> {
    SolutionField::from_fn(x, t, FieldMeta::new("hj-family").with("a", a), |x, t| hj_value(a, x, t))
}

/// `‖u_a − u_b‖` in `L²([−1, 1] × [0, 1])`, integrated exactly: the integrand
/// is piecewise polynomial and Gauss–Legendre is applied between every
/// breakpoint in `x` and in `t`.
pub fn hj_pair_distance(a: f64, b: f64) -> f64 {
    let gl = GaussLegendre::new(8);
    let t_breaks: Vec<f64> = [a, b].iter().filter(|&&c| c > 0.0).map(|c| 1.0 / c).collect();
    let sq = gl.piecewise(0.0, 1.0, &t_breaks, 1, |t| {
        let xb = [0.0, a * t, -a * t, b * t, -b * t];
        gl.piecewise(-1.0, 1.0, &xb, 1, |x| {
            let d = hj_value(a, x, t) - hj_value(b, x, t);
            d * d
        })
    });
    sq.sqrt()
}
