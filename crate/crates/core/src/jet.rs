//! Second-order jets in the two network inputs `(x, t)`.
//!
//! A [`Jet2`] carries a value together with `∂/∂x`, `∂/∂t` and `∂²/∂x²`.
//! Arithmetic follows the chain rule, so evaluating a network on jets seeded
//! with [`Jet2::var_x`] and [`Jet2::var_t`] yields `u`, `u_x`, `u_t` and
//! `u_xx` in one pass. Mixed and `t`-second derivatives are not carried.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Jet2<T> {
    pub val: T,
    /// ∂/∂x
    pub dx: T,
    /// ∂/∂t
    pub dt: T,
    /// ∂²/∂x²
    pub dxx: T,
}

impl<T: Scalar> Jet2<T> {
    pub fn new(val: T, dx: T, dt: T, dxx: T) -> Self {
        Self { val, dx, dt, dxx }
    }

    /// A constant: every derivative is zero.
    pub fn constant(val: T) -> Self {
        Self::new(val, T::zero(), T::zero(), T::zero())
    }

    /// The input coordinate `x` itself.
    pub fn var_x(x: T) -> Self {
        Self::new(x, T::one(), T::zero(), T::zero())
    }

    /// The input coordinate `t` itself.
    pub fn var_t(t: T) -> Self {
        Self::new(t, T::zero(), T::one(), T::zero())
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    /// Composes with a scalar function given its value and first two
    /// derivatives at `self.val`.
    #[inline]
    pub fn chain(self, g: T, g1: T, g2: T) -> Self {
        Self {
            val: g,
            dx: g1 * self.dx,
            dt: g1 * self.dt,
            dxx: g2 * self.dx * self.dx + g1 * self.dxx,
        }
    }

    /// Composes with `f`, where `f` returns `(g, g', g'')` at a point.
    pub fn map(self, f: impl FnOnce(T) -> (T, T, T)) -> Self {
        let (g, g1, g2) = f(self.val);
        self.chain(g, g1, g2)
    }

    pub fn scale(self, k: T) -> Self {
        Self::new(self.val * k, self.dx * k, self.dt * k, self.dxx * k)
    }

    pub fn square(self) -> Self {
        self * self
    }

    pub fn exp(self) -> Self {
        let e = self.val.exp();
        self.chain(e, e, e)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.val.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.val.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn recip(self) -> Self {
        let r = self.val.recip();
        self.chain(r, -r * r, T::lit(2.0) * r * r * r)
    }

    pub fn is_finite(&self) -> bool {
        self.val.is_finite() && self.dx.is_finite() && self.dt.is_finite() && self.dxx.is_finite()
    }

    pub fn to_array(self) -> [T; 4] {
        [self.val, self.dx, self.dt, self.dxx]
    }

    pub fn from_array(a: [T; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

impl<T: Scalar> Add for Jet2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.val + o.val, self.dx + o.dx, self.dt + o.dt, self.dxx + o.dxx)
    }
}

impl<T: Scalar> AddAssign for Jet2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> Sub for Jet2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.val - o.val, self.dx - o.dx, self.dt - o.dt, self.dxx - o.dxx)
    }
}

impl<T: Scalar> Neg for Jet2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.val, -self.dx, -self.dt, -self.dxx)
    }
}

impl<T: Scalar> Mul for Jet2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let two = T::lit(2.0);
        Self {
            val: self.val * o.val,
            dx: self.dx * o.val + self.val * o.dx,
            dt: self.dt * o.val + self.val * o.dt,
            dxx: self.dxx * o.val + two * self.dx * o.dx + self.val * o.dxx,
        }
    }
}

impl<T: Scalar> Div for Jet2<T> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<T: Scalar> Add<T> for Jet2<T> {
    type Output = Self;
    fn add(self, c: T) -> Self {
        Self { val: self.val + c, ..self }
    }
}

impl<T: Scalar> Sub<T> for Jet2<T> {
    type Output = Self;
    fn sub(self, c: T) -> Self {
        Self { val: self.val - c, ..self }
    }
}

impl<T: Scalar> Mul<T> for Jet2<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        self.scale(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fd_x(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        (d1, d2)
    }

    #[test]
    fn constants_have_no_derivatives() {
        let c = Jet2::constant(3.5_f64);
        assert_eq!((c.dx, c.dt, c.dxx), (0.0, 0.0, 0.0));
        let p = c * Jet2::constant(2.0) + 1.0;
        assert_eq!(p, Jet2::constant(8.0));
    }

    #[test]
    fn product_rule_on_polynomial() {
        // u = x^2 t + 3x at (x, t) = (2, 5)
        let x = Jet2::var_x(2.0_f64);
        let t = Jet2::var_t(5.0);
        let u = x * x * t + x * 3.0;
        assert_eq!(u.val, 26.0);
        assert_eq!(u.dx, 2.0 * 2.0 * 5.0 + 3.0);
        assert_eq!(u.dt, 4.0);
        assert_eq!(u.dxx, 10.0);
    }

    #[test]
    fn composite_matches_finite_differences() {
        let f = |x: f64| (x.sin() * x).exp() / (1.0 + x * x);
        let jx = Jet2::var_x(0.7_f64);
        let j = (jx.sin() * jx).exp() / (Jet2::constant(1.0) + jx * jx);
        let (d1, d2) = fd_x(f, 0.7, 1e-4);
        assert_relative_eq!(j.val, f(0.7), max_relative = 1e-14);
        assert_relative_eq!(j.dx, d1, max_relative = 1e-7);
        assert_relative_eq!(j.dxx, d2, max_relative = 1e-5);
    }

    proptest! {
        #[test]
        fn chain_rule_identity(v in -3.0..3.0_f64, dx in -2.0..2.0_f64, dxx in -2.0..2.0_f64) {
            let j = Jet2::new(v, dx, 0.3, dxx);
            let g = j.cos();
            prop_assert!((g.dx - (-v.sin()) * dx).abs() < 1e-14);
            prop_assert!((g.dxx - (-v.cos() * dx * dx - v.sin() * dxx)).abs() < 1e-13);
        }

        #[test]
        fn linear_combination_is_componentwise(a in -5.0..5.0_f64, b in -5.0..5.0_f64,
                                               u in proptest::array::uniform4(-3.0..3.0_f64),
                                               w in proptest::array::uniform4(-3.0..3.0_f64)) {
            let ju = Jet2::from_array(u);
            let jw = Jet2::from_array(w);
            let lhs = ju * a + jw * b;
            let rhs = Jet2::from_array([a*u[0]+b*w[0], a*u[1]+b*w[1], a*u[2]+b*w[2], a*u[3]+b*w[3]]);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
