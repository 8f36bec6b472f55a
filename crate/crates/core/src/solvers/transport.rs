//! Constant-coefficient transport `u_t + b u_x = c`, solved along
//! characteristics `x − b t = const`.

use serde::{Deserialize, Serialize};

use crate::field::{FieldError, FieldMeta, Grid1, SolutionField};
use crate::problems::{DomainBox, InitialCondition};
use crate::scalar::Scalar;

/// `u(x, t) = φ(x − bt) + ct`.
pub fn transport_exact<T: Scalar>(b: T, c: T, phi: &InitialCondition<T>, x: T, t: T) -> T {
    phi.eval(x - b * t) + c * t
}

pub fn solve_transport_exact<T: Scalar>(
    b: T,
    c: T,
    phi: &InitialCondition<T>,
    x: Grid1,
    t: Grid1,
) -> Result<SolutionField<T>, FieldError> {
    let meta = FieldMeta::new("transport-exact").with("b", b).with("c", c);
    SolutionField::from_fn(x, t, meta, |x, t| transport_exact(b, c, phi, x, t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FootKind {
    /// The characteristic reaches `t = 0` inside the spatial interval.
    Initial,
    /// It leaves through `x = x_lo` or `x = x_hi` first.
    Lateral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Foot<T> {
    pub x0: T,
    pub t0: T,
    pub kind: FootKind,
}

/// Follows `ẏ = b` backward from `(x, t)` to the first point on `t = 0` or
/// on the lateral boundary of `domain`. A characteristic that reaches a
/// corner counts as reaching `t = 0`.
pub fn characteristic_foot<T: Scalar>(x: T, t: T, b: T, domain: &DomainBox<T>) -> Foot<T> {
    let x_init = x - b * t;
    if b == T::zero() || (x_init >= domain.x_lo && x_init <= domain.x_hi) {
        return Foot { x0: x_init, t0: T::zero(), kind: FootKind::Initial };
    }
    let wall = if b > T::zero() { domain.x_lo } else { domain.x_hi };
    Foot { x0: wall, t0: t - (x - wall) / b, kind: FootKind::Lateral }
}
