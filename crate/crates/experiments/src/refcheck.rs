//! Self-checks of the reference solvers: spectral Burgers under mode
//! doubling, heat-kernel quadrature against the Gaussian closed form, and
//! the transport solution along characteristics.

use pinn_core::field::Grid1;
use pinn_core::problems::{make_heat, InitialCondition};
use pinn_core::solvers::burgers::SpectralConfig;
use pinn_core::solvers::heat::{solve_heat_kernel, QuadSpec};
use pinn_core::solvers::transport::solve_transport_exact;
use serde::{Deserialize, Serialize};

use crate::cache::ReferenceCache;
use crate::exp_e::{self, EConfig};
use crate::report::{Comparison, ExperimentReport, Verdict};
use crate::ExperimentError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefCheckConfig {
    /// The coarser of the two spectral runs; the finer doubles `modes`.
    pub burgers: SpectralConfig,
    pub burgers_dx: f64,
    pub burgers_dt: f64,
    pub burgers_tol: f64,
    pub heat_variance: f64,
    pub heat_nx: usize,
    pub heat_nt: usize,
    pub heat_quad: QuadSpec,
    pub heat_tol: f64,
    pub transport_b: f64,
    pub transport_c: f64,
    /// Grid spacing in both `x` and `t`, so that characteristics of unit
    /// speed pass through grid points.
    pub transport_h: f64,
    pub transport_tol: f64,
}

impl Default for RefCheckConfig {
    fn default() -> Self {
        Self {
            burgers: SpectralConfig::default(),
            burgers_dx: 0.001,
            burgers_dt: 0.01,
            burgers_tol: 1e-6,
            heat_variance: 0.25,
            heat_nx: 201,
            heat_nt: 101,
            heat_quad: QuadSpec::default(),
            heat_tol: 1e-8,
            transport_b: 1.0,
            transport_c: 0.5,
            transport_h: 0.01,
            transport_tol: 1e-12,
        }
    }
}

/// Largest difference between the spectral solutions at `modes` and
/// `2·modes`.
pub fn burgers_self_convergence(cfg: &RefCheckConfig, cache: &ReferenceCache) -> Result<f64, ExperimentError> {
    let at = |modes: usize| {
        let e = EConfig {
            reference: SpectralConfig { modes, ..cfg.burgers },
            ref_dx: cfg.burgers_dx,
            ref_dt: cfg.burgers_dt,
            ..EConfig::default()
        };
        exp_e::reference(&e, cache)
    };
    let (a, b) = (at(cfg.burgers.modes)?, at(2 * cfg.burgers.modes)?);
    Ok(a.field.values.iter().zip(&b.field.values).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max))
}

/// Largest difference between the quadrature solution for Gaussian data
/// and the Gaussian of variance `σ² + 2t`.
pub fn heat_vs_gaussian(cfg: &RefCheckConfig) -> Result<f64, ExperimentError> {
    let phi = InitialCondition::Gaussian { mean: 0.0, variance: cfg.heat_variance };
    let (gx, gt) = (Grid1::new(-1.0, 1.0, cfg.heat_nx)?, Grid1::new(0.0, 1.0, cfg.heat_nt)?);
    let field = solve_heat_kernel(&phi, gx, gt, &cfg.heat_quad)?;
    let problem = make_heat(phi);
    let mut worst: f64 = 0.0;
    for j in 0..gt.n {
        for i in 0..gx.n {
            let exact = problem.exact_jet(gx.point(i), gt.point(j)).expect("Gaussian heat data has a closed form").val;
            worst = worst.max((field.at(i, j) - exact).abs());
        }
    }
    Ok(worst)
}

/// Largest change of `u − c·t` between grid points on the same
/// characteristic `x − b·t = const`. Requires `b = 1`.
pub fn transport_constancy(cfg: &RefCheckConfig) -> Result<f64, ExperimentError> {
    if cfg.transport_b != 1.0 {
        return Err(ExperimentError::Config("transport constancy check needs b = 1".into()));
    }
    let phi = InitialCondition::Bump { center: 0.0, radius: 1.0, height: 1.0 };
    let gx = Grid1::with_spacing(-1.0, 1.0, cfg.transport_h)?;
    let gt = Grid1::with_spacing(0.0, 1.0, cfg.transport_h)?;
    let f = solve_transport_exact(cfg.transport_b, cfg.transport_c, &phi, gx, gt)?;
    let w = |i: usize, j: usize| f.at(i, j) - cfg.transport_c * gt.point(j);
    let mut worst: f64 = 0.0;
    for i0 in 0..gx.n {
        let base = w(i0, 0);
        for k in 1..gt.n.min(gx.n - i0) {
            worst = worst.max((w(i0 + k, k) - base).abs());
        }
    }
    for j0 in 1..gt.n {
        let base = w(0, j0);
        for k in 1..(gt.n - j0).min(gx.n) {
            worst = worst.max((w(k, j0 + k) - base).abs());
        }
    }
    Ok(worst)
}

pub fn run(cfg: &RefCheckConfig, cache: &ReferenceCache) -> Result<ExperimentReport, ExperimentError> {
    let mut rep = ExperimentReport::new("refcheck", cfg, 0);
    let checks = [
        ("refcheck.transport", "transport solution constant along characteristics", transport_constancy(cfg)?, cfg.transport_tol),
        ("refcheck.heat", "heat-kernel quadrature matches the Gaussian closed form", heat_vs_gaussian(cfg)?, cfg.heat_tol),
        ("refcheck.burgers", "spectral Burgers solution converged under mode doubling", burgers_self_convergence(cfg, cache)?, cfg.burgers_tol),
    ];
    for (claim, desc, measured, tol) in checks {
        rep.metric(claim.trim_start_matches("refcheck."), measured);
        rep.verdict(Verdict::check(claim, desc, Comparison::Below, tol, measured, 0.0));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_and_transport_checks_pass() {
        let cfg = RefCheckConfig::default();
        assert!(transport_constancy(&cfg).unwrap() < 1e-12);
        assert!(heat_vs_gaussian(&cfg).unwrap() < 1e-8);
    }

    #[test]
    fn coarse_burgers_runs_are_not_converged() {
        let cfg = RefCheckConfig {
            burgers: SpectralConfig { modes: 256, dt: 1e-3, ..SpectralConfig::default() },
            burgers_dx: 0.01,
            burgers_dt: 0.1,
            ..Default::default()
        };
        assert!(burgers_self_convergence(&cfg, &ReferenceCache::disabled()).unwrap() > 1e-3);
    }
}
