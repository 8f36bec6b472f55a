//! Non-locality of the heat equation: two initial data that agree on
//! `[−1, 1]` give fields that both solve the problem on `D` yet differ there
//! by an amount that grows without bound with the far-away bump.

use pinn_core::field::{l2_field_error, Grid1, SolutionField};
use pinn_core::problems::InitialCondition;
use pinn_core::solvers::heat::{heat_fd_residual, solve_heat_kernel, QuadSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::Artifacts;
use crate::cache::ReferenceCache;
use crate::plot::{heatmap, t_slices, LinePlot};
use crate::report::{Comparison, ExperimentReport, Verdict};
use crate::ExperimentError;

/// `‖w‖` in `L²(D)` for the heat solution `w` with a unit-height bump of
/// radius 1 centred at `x = 3` as initial data.
pub const UNIT_FAR_BUMP_L2: f64 = 0.04948415725407388;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CConfig {
    pub amplitudes: Vec<f64>,
    pub far_center: f64,
    pub far_radius: f64,
    /// Height of the far bump per unit amplitude.
    pub far_height: f64,
    pub nx: usize,
    pub nt: usize,
    pub quad: QuadSpec,
    pub residual_tol: f64,
    /// The finite-difference residual is checked for `t ≥ residual_t_min`.
    pub residual_t_min: f64,
    pub linearity_tol: f64,
    /// Required error at the largest amplitude.
    pub threshold: f64,
    pub oracle_rel_tol: f64,
}

impl Default for CConfig {
    fn default() -> Self {
        Self {
            amplitudes: vec![0.0, 1.0, 2.0, 4.0, 8.0],
            far_center: 3.0,
            far_radius: 1.0,
            far_height: 4.0,
            nx: 201,
            nt: 1001,
            // The kernel is at least 0.2 wide for t >= 0.01; finer panels only cost time.
            quad: QuadSpec { max_panel: 0.25, ..QuadSpec::default() },
            residual_tol: 1e-4,
            residual_t_min: 0.05,
            linearity_tol: 1e-6,
            threshold: 1.0,
            oracle_rel_tol: 1e-3,
        }
    }
}

pub fn near_data() -> InitialCondition<f64> {
    InitialCondition::Bump { center: 0.0, radius: 1.0, height: 1.0 }
}

pub fn far_data(cfg: &CConfig, amplitude: f64) -> InitialCondition<f64> {
    InitialCondition::Sum {
        terms: vec![
            near_data(),
            InitialCondition::Bump { center: cfg.far_center, radius: cfg.far_radius, height: amplitude * cfg.far_height },
        ],
    }
}

fn solve(
    cache: &ReferenceCache,
    phi: &InitialCondition<f64>,
    cfg: &CConfig,
) -> Result<(SolutionField<f64>, String), ExperimentError> {
    let gx = Grid1::new(-1.0, 1.0, cfg.nx)?;
    let gt = Grid1::new(0.0, 1.0, cfg.nt)?;
    let params = ("heat-kernel", phi, gx, gt, cfg.quad);
    let c = cache.get_or_compute(&params, || {
        let f = solve_heat_kernel(phi, gx, gt, &cfg.quad).map_err(|e| e.to_string())?;
        Ok((f, Default::default()))
    })?;
    Ok((c.field, c.key))
}

pub fn run(cfg: &CConfig, cache: &ReferenceCache, out: &Artifacts) -> Result<ExperimentReport, ExperimentError> {
    if cfg.amplitudes.is_empty() || cfg.amplitudes.iter().any(|a| !a.is_finite()) || cfg.amplitudes.windows(2).any(|w| w[0] >= w[1]) || cfg.amplitudes[0] < 0.0 {
        return Err(ExperimentError::Config("amplitudes must be non-negative and strictly ascending".into()));
    }
    if cfg.far_center - cfg.far_radius <= 1.0 {
        return Err(ExperimentError::Config("far bump must not reach [-1, 1]".into()));
    }
    let mut rep = ExperimentReport::new("C", cfg, 0);
    let (u, key) = solve(cache, &near_data(), cfg)?;
    rep.provenance.cache_keys.push(key);
    let solved: Vec<Result<(SolutionField<f64>, String), ExperimentError>> =
        cfg.amplitudes.par_iter().map(|&a| solve(cache, &far_data(cfg, a), cfg)).collect();
    let mut fields = Vec::new();
    for s in solved {
        let (f, k) = s?;
        rep.provenance.cache_keys.push(k);
        fields.push(f);
    }

    let res_u = heat_fd_residual(&u, cfg.residual_t_min);
    rep.metric("residual.u", res_u);
    rep.verdict(Verdict::check("C.residual", "discrete heat residual of u on D", Comparison::Below, cfg.residual_tol, res_u, 0.0));
    let xs = u.x.points();
    let mut errors = Vec::new();
    for (&a, v) in cfg.amplitudes.iter().zip(&fields) {
        let r = heat_fd_residual(v, cfg.residual_t_min);
        rep.metric(format!("residual.A={a}"), r);
        rep.verdict(Verdict::check(
            "C.residual",
            format!("discrete heat residual of v with A = {a}"),
            Comparison::Below,
            cfg.residual_tol,
            r,
            0.0,
        ));
        let phi2 = far_data(cfg, a);
        let ic_gap = xs.iter().map(|&x| (phi2.eval(x) - near_data().eval(x)).abs()).fold(0.0, f64::max);
        let row_gap = v.row(0).iter().zip(u.row(0)).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        rep.verdict(Verdict::check(
            "C.same_ic",
            format!("initial data agree on [-1, 1] for A = {a}"),
            Comparison::AtMost,
            0.0,
            ic_gap.max(row_gap),
            0.0,
        ));
        let err = l2_field_error(v, &u)?;
        rep.metric(format!("l2_error.A={a}"), err);
        errors.push(err);
    }
    rep.series("amplitude", cfg.amplitudes.clone());
    rep.series("l2_error", errors.clone());

    // Linearity: err(A)/A is the same for every positive amplitude.
    let positive: Vec<(f64, f64)> = cfg.amplitudes.iter().copied().zip(errors.iter().copied()).filter(|(a, _)| *a > 0.0).collect();
    if let Some(&(a0, e0)) = positive.first() {
        let unit = e0 / a0;
        rep.metric("l2_error_per_amplitude", unit);
        for &(a, e) in &positive[1..] {
            rep.verdict(Verdict::check(
                "C.linear",
                format!("error at A = {a} equals A times the error per unit amplitude"),
                Comparison::RelWithin,
                a * unit,
                e,
                cfg.linearity_tol,
            ));
        }
        let oracle = UNIT_FAR_BUMP_L2 * cfg.far_height;
        if cfg.far_center == 3.0 && cfg.far_radius == 1.0 {
            rep.verdict(Verdict::check(
                "C.oracle",
                "grid error per unit amplitude matches the continuous quadrature value",
                Comparison::RelWithin,
                oracle,
                unit,
                cfg.oracle_rel_tol,
            ));
        }
    }
    if let Some((&a, &e)) = cfg.amplitudes.iter().zip(&errors).find(|(a, _)| **a == 0.0) {
        rep.verdict(Verdict::check("C.zero", format!("A = {a} reproduces u exactly"), Comparison::AtMost, 0.0, e, 0.0));
    }
    let increasing = errors.windows(2).all(|w| w[1] > w[0]);
    rep.verdict(Verdict::holds("C.monotone", "error strictly increases with the amplitude", increasing));
    let largest = *errors.last().expect("non-empty");
    rep.verdict(Verdict::check(
        "C.unbounded",
        format!("error at the largest amplitude exceeds K = {}", cfg.threshold),
        Comparison::Above,
        cfg.threshold,
        largest,
        0.0,
    ));

    out.csv(
        "errors.csv",
        &["amplitude", "l2_error"],
        &cfg.amplitudes.iter().zip(&errors).map(|(a, e)| vec![*a, *e]).collect::<Vec<_>>(),
    )?;
    out.svg("error_vs_amplitude", || {
        let mut p = LinePlot::new("||v - u|| in L2(D)", "A", "error").with_markers();
        p.add("measured", cfg.amplitudes.iter().copied().zip(errors.iter().copied()).collect());
        p.to_svg()
    })?;
    out.svg("u_heatmap", || heatmap(&u, "u: near bump only", 150))?;
    if let Some(v) = fields.last() {
        out.svg("v_heatmap", || heatmap(v, "v: with far bump (largest A)", 150))?;
        out.svg("t_slices", || t_slices(&[("u", &u), ("v", v)], "u and v at five times"))?;
    }
    out.report(&rep)?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_run_has_linear_error() {
        let cfg = CConfig { nx: 41, nt: 101, amplitudes: vec![0.0, 1.0, 2.0], ..CConfig::default() };
        let rep = run(&cfg, &ReferenceCache::disabled(), &Artifacts::none()).unwrap();
        for v in rep.claim("C.linear").iter().chain(&rep.claim("C.zero")).chain(&rep.claim("C.same_ic")) {
            assert!(v.passed(), "{v}");
        }
        let e1 = rep.metrics["l2_error.A=1"];
        let e2 = rep.metrics["l2_error.A=2"];
        assert!((e2 / e1 - 2.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_overlapping_far_bump() {
        let cfg = CConfig { far_center: 1.5, ..CConfig::default() };
        assert!(run(&cfg, &ReferenceCache::disabled(), &Artifacts::none()).is_err());
    }
}
