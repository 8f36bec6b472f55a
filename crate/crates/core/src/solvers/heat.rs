//! Heat equation `u_t = u_xx` on the whole line by convolution with the
//! heat kernel `Γ(x, t; ξ) = exp(−(x − ξ)²/(4t)) / (2√(πt))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, FieldMeta, Grid1, SolutionField};
use crate::problems::InitialCondition;
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum HeatError {
    #[error("kernel truncation radius {radius} leaves tail bound {tail:e} above tolerance {tol:e}; use radius >= {needed}")]
    Truncation { radius: f64, tail: f64, tol: f64, needed: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("time grid must start at t = 0 or later, got {0}")]
    NegativeTime(f64),
}

/// Quadrature settings. At time `t` the kernel is integrated over
/// `|ξ − x| ≤ radius·√(t/T)`, where `T` is the final time of the grid, in
/// panels no wider than `panel_scale·√t` (and never wider than
/// `max_panel`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Truncation radius at the final time; `None` picks `10·√(2T)`.
    pub radius: Option<f64>,
    pub nodes: usize,
    pub panel_scale: f64,
    pub max_panel: f64,
    /// Admissible bound on the discarded kernel tail.
    pub tail_tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { radius: None, nodes: 16, panel_scale: 0.5, max_panel: 0.05, tail_tol: 1e-12 }
    }
}

impl QuadSpec {
    pub fn radius_for(&self, t_final: f64) -> f64 {
        self.radius.unwrap_or(10.0 * (2.0 * t_final).sqrt())
    }
}

/// `Γ(x, t; ξ)`.
#[inline]
pub fn heat_kernel<T: Scalar>(x: T, t: T, xi: T) -> T {
    let d = x - xi;
    (-(d * d) / (T::lit(4.0) * t)).exp() / (T::lit(2.0) * (T::PI() * t).sqrt())
}

/// `u(x, t)` for a single point, `t > 0`.
pub fn heat_value<T: Scalar>(phi: &InitialCondition<T>, x: T, t: T, window: T, spec: &QuadSpec, gl: &GaussLegendre) -> T {
    let lo = x - window;
    let hi = x + window;
    let pieces = match phi.support_pieces() {
        Some(p) => p,
        None => vec![(lo, hi)],
    };
    let max_panel = T::lit(spec.max_panel).min(T::lit(spec.panel_scale) * t.sqrt());
    let mut sum = T::zero();
    for (a, b) in pieces {
        let (a, b) = (a.max(lo), b.min(hi));
        if !(a < b) {
            continue;
        }
        let panels = ((b - a) / max_panel).ceil().to_usize().unwrap_or(1).max(1);
        sum = sum + gl.composite(a, b, panels, |xi| heat_kernel(x, t, xi) * phi.eval(xi));
    }
    sum
}

/// Heat-kernel solution on the grid. The `t = 0` row is `φ` itself.
pub fn solve_heat_kernel<T: Scalar>(
    phi: &InitialCondition<T>,
    x: Grid1,
    t: Grid1,
    spec: &QuadSpec,
) -> Result<SolutionField<T>, HeatError> {
    if t.lo < 0.0 {
        return Err(HeatError::NegativeTime(t.lo));
    }
    let t_final = t.hi;
    let radius = spec.radius_for(t_final);
    let sup = phi.sup_abs().to_f64_lossy();
    // Mass of the kernel beyond the window is at most exp(−R²/(4T)).
    let tail = sup * (-(radius * radius) / (4.0 * t_final)).exp();
    if tail > spec.tail_tol {
        let needed = (4.0 * t_final * (sup / spec.tail_tol).ln()).sqrt();
        return Err(HeatError::Truncation { radius, tail, tol: spec.tail_tol, needed });
    }
    let gl = GaussLegendre::new(spec.nodes);
    let rows: Vec<Vec<T>> = (0..t.n)
        .into_par_iter()
        .map(|j| {
            let tj = t.point(j);
            (0..x.n)
                .map(|i| {
                    let xi = T::lit(x.point(i));
                    if tj == 0.0 {
                        phi.eval(xi)
                    } else {
                        let window = T::lit(radius * (tj / t_final).sqrt());
                        heat_value(phi, xi, T::lit(tj), window, spec, &gl)
                    }
                })
                .collect()
        })
        .collect();
    let meta = FieldMeta::new("heat-kernel")
        .with("radius", radius)
        .with("nodes", spec.nodes)
        .with("panel_scale", spec.panel_scale);
    Ok(SolutionField::new(x, t, rows.concat(), meta)?)
}

/// Largest `|u_t − u_xx|` from fourth-order central differences, over grid
/// points with `t ≥ t_min` that are at least two cells from every edge.
pub fn heat_fd_residual<T: Scalar>(field: &SolutionField<T>, t_min: f64) -> T {
    let hx = T::lit(field.x.spacing());
    let ht = T::lit(field.t.spacing());
    let c12 = T::lit(12.0);
    let (c8, c16, c30) = (T::lit(8.0), T::lit(16.0), T::lit(30.0));
    let mut worst = T::zero();
    for j in 2..field.t.n.saturating_sub(2) {
        if field.t.point(j) < t_min {
            continue;
        }
        for i in 2..field.x.n.saturating_sub(2) {
            let u = |di: isize, dj: isize| field.at((i as isize + di) as usize, (j as isize + dj) as usize);
            let ut = (u(0, -2) - c8 * u(0, -1) + c8 * u(0, 1) - u(0, 2)) / (c12 * ht);
            let uxx = (-u(-2, 0) + c16 * u(-1, 0) - c30 * u(0, 0) + c16 * u(1, 0) - u(2, 0)) / (c12 * hx * hx);
            worst = worst.max((ut - uxx).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grids() -> (Grid1, Grid1) {
        (Grid1::new(-1.0, 1.0, 21).unwrap(), Grid1::new(0.0, 1.0, 11).unwrap())
    }

    #[test]
    fn gaussian_convolution_closed_form() {
        let phi = InitialCondition::Gaussian { mean: 0.0, variance: 1.0 };
        let spec = QuadSpec::default();
        let gl = GaussLegendre::new(spec.nodes);
        let w = spec.radius_for(1.0) * 0.5f64.sqrt();
        let got = heat_value(&phi, 0.3, 0.5, w, &spec, &gl);
        let want = InitialCondition::Gaussian { mean: 0.0, variance: 2.0 }.eval(0.3);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn constant_data_is_preserved() {
        let phi = InitialCondition::Constant { value: 1.0_f64 };
        let (gx, _) = grids();
        let gt = Grid1::new(0.0, 0.01, 3).unwrap();
        let f = solve_heat_kernel(&phi, gx, gt, &QuadSpec::default()).unwrap();
        assert!(f.values.iter().all(|v| (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn odd_data_gives_zero_at_origin() {
        let phi = InitialCondition::<f64>::half_sine();
        let (gx, gt) = grids();
        let f = solve_heat_kernel(&phi, gx, gt, &QuadSpec::default()).unwrap();
        for j in 0..gt.n {
            assert!(f.at(10, j).abs() < 1e-13);
        }
        // sin(kx) decays like exp(−k²t).
        let k = std::f64::consts::FRAC_PI_2;
        assert_relative_eq!(f.at(15, 10), (k * 0.5).sin() * (-k * k).exp(), max_relative = 1e-10);
    }

    #[test]
    fn small_radius_is_rejected() {
        let phi = InitialCondition::Constant { value: 1.0 };
        let (gx, gt) = grids();
        let spec = QuadSpec { radius: Some(1.0), ..QuadSpec::default() };
        match solve_heat_kernel(&phi, gx, gt, &spec) {
            Err(HeatError::Truncation { needed, .. }) => assert!(needed > 1.0),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn fd_residual_of_bump_solution_is_small() {
        let phi = InitialCondition::Bump { center: 0.0, radius: 1.0, height: 1.0 };
        let gx = Grid1::new(-1.0, 1.0, 201).unwrap();
        let gt = Grid1::new(0.0, 1.0, 1001).unwrap();
        let f = solve_heat_kernel(&phi, gx, gt, &QuadSpec::default()).unwrap();
        let r = heat_fd_residual(&f, 0.05);
        assert!(r < 1e-4, "residual {r}");
    }
}
