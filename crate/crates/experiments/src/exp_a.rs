//! Non-uniqueness: the Hamilton–Jacobi family `u_a` has zero discretized
//! PINN loss for every `a`, yet its members are far apart in `L²(D)`.

use pinn_core::field::Grid1;
use pinn_core::problems::{make_hamilton_jacobi, CollocationSet, Sampler};
use pinn_core::solvers::hj::{hj_family, hj_jet, hj_pair_distance, near_kink};
use pinn_core::training::{pinn_loss_of, LossWeights};
use serde::{Deserialize, Serialize};

use crate::artifacts::Artifacts;
use crate::plot::{heatmap, LinePlot};
use crate::report::{Comparison, ExperimentReport, Verdict};
use crate::ExperimentError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AConfig {
    pub a_values: Vec<f64>,
    pub nx: usize,
    pub nt: usize,
    /// Grid points closer than this to a kink line are left out.
    pub kink_tol: f64,
    pub zero_loss_tol: f64,
    pub min_separation: f64,
    pub oracle_tol: f64,
}

impl Default for AConfig {
    fn default() -> Self {
        Self {
            a_values: vec![0.0, 0.5, 1.0, 2.0],
            nx: 201,
            nt: 101,
            kink_tol: 1e-9,
            zero_loss_tol: 1e-10,
            min_separation: 0.01,
            oracle_tol: 1e-6,
        }
    }
}

/// `‖u_a − u_b‖²` over `[−1, 1] × [0, 1]` in closed form (`0 ≤ a ≤ b`).
/// The three cases are whether neither, one or both fans are clipped by
/// `|x| ≤ 1` before `t = 1`.
pub fn hj_pair_distance_sq_closed(a: f64, b: f64) -> f64 {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let common = a.powi(5) / 6.0 + a.powi(4) * b / 6.0 - a.powi(3) * b * b / 2.0;
    if b <= 1.0 {
        common + b.powi(5) / 6.0
    } else if a <= 1.0 {
        common + 2.0 * b.powi(4) / 3.0 - b.powi(3) + 2.0 * b * b / 3.0 - b / 6.0
    } else {
        2.0 * a.powi(4) / 3.0 - a.powi(3) - 4.0 * a * a * b * b / 3.0 + a * a * b + 2.0 * a * a / 3.0 + a * b * b
            - 4.0 * a * b / 3.0
            - a / 6.0
            + 2.0 * b.powi(4) / 3.0
            - b.powi(3)
            + 2.0 * b * b / 3.0
            + b / 3.0
            - b * b / (6.0 * a)
    }
}

/// Grid collocation points with those on a kink of any family member removed.
pub fn kink_free_grid(cfg: &AConfig) -> Result<(CollocationSet<f64>, usize), ExperimentError> {
    let problem = make_hamilton_jacobi::<f64>();
    let full = pinn_core::problems::sample_collocation(&problem.domain, Sampler::Grid { nx: cfg.nx, nt: cfg.nt })
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let before = full.interior.len();
    let interior: Vec<(f64, f64)> = full
        .interior
        .into_iter()
        .filter(|&(x, t)| !cfg.a_values.iter().any(|&a| near_kink(a, x, t, cfg.kink_tol)))
        .collect();
    let dropped = before - interior.len();
    Ok((CollocationSet { interior, initial: full.initial, sampler: full.sampler }, dropped))
}

pub fn run(cfg: &AConfig, out: &Artifacts) -> Result<ExperimentReport, ExperimentError> {
    if cfg.a_values.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(ExperimentError::Config("a values must be finite and non-negative".into()));
    }
    let mut rep = ExperimentReport::new("A", cfg, 0);
    let problem = make_hamilton_jacobi::<f64>();
    let (colloc, dropped) = kink_free_grid(cfg)?;
    rep.metric("grid.points", colloc.interior.len() as f64);
    rep.metric("grid.dropped_on_kinks", dropped as f64);
    let w = LossWeights::default();
    let mut losses = Vec::new();
    for &a in &cfg.a_values {
        // Kinks at t = 0 only touch the initial row, where u_a = 0 anyway.
        let l = pinn_loss_of(|x, t| Some(hj_jet(a, x, t)), &problem, &colloc, &w);
        rep.metric(format!("loss.a={a}"), l.total);
        rep.metric(format!("loss_res.a={a}"), l.residual);
        rep.metric(format!("loss_ic.a={a}"), l.ic);
        rep.verdict(Verdict::check(
            "A.zero_loss",
            format!("discretized PINN loss of u_a with a = {a}"),
            Comparison::Below,
            cfg.zero_loss_tol,
            l.total,
            cfg.zero_loss_tol,
        ));
        losses.push(l.total);
    }
    rep.series("loss", losses);
    let mut dist_rows = Vec::new();
    for (i, &a) in cfg.a_values.iter().enumerate() {
        for &b in &cfg.a_values[i + 1..] {
            let d = hj_pair_distance(a, b);
            let oracle = hj_pair_distance_sq_closed(a, b).sqrt();
            rep.metric(format!("dist.{a}-{b}"), d);
            rep.verdict(Verdict::check(
                "A.separation",
                format!("L2(D) distance between u_{a} and u_{b}"),
                Comparison::Above,
                cfg.min_separation,
                d,
                0.0,
            ));
            rep.verdict(Verdict::check(
                "A.oracle",
                format!("distance u_{a}-u_{b} matches the closed-form integral"),
                Comparison::AbsWithin,
                oracle,
                d,
                cfg.oracle_tol,
            ));
            dist_rows.push(vec![a, b, d, oracle]);
        }
    }
    let distinct = cfg.a_values.len();
    rep.metric("distinct_zero_loss_solutions", if rep.all_passed() { distinct as f64 } else { 0.0 });
    out.csv("distances.csv", &["a", "b", "distance", "closed_form"], &dist_rows)?;
    let gx = Grid1::new(-1.0, 1.0, cfg.nx).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let gt = Grid1::new(0.0, 1.0, cfg.nt).map_err(|e| ExperimentError::Config(e.to_string()))?;
    for &a in &cfg.a_values {
        out.svg(&format!("u_a={a}"), || {
            let f = hj_family(a, gx, gt).expect("valid grids");
            heatmap(&f, &format!("u_a, a = {a}"), 120)
        })?;
    }
    out.svg("u_at_t1", || {
        let mut p = LinePlot::new("u_a(x, 1)", "x", "u");
        for &a in &cfg.a_values {
            p.add(&format!("a = {a}"), gx.points().into_iter().map(|x| (x, hj_jet(a, x, 1.0).val)).collect());
        }
        p.to_svg()
    })?;
    out.report(&rep)?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_matches_frozen_values_and_quadrature() {
        let frozen = [
            (0.0, 0.5, 1.0 / 192.0),
            (0.0, 1.0, 1.0 / 6.0),
            (0.0, 2.0, 5.0),
            (0.5, 1.0, 23.0 / 192.0),
            (0.5, 2.0, 917.0 / 192.0),
            (1.0, 2.0, 3.5),
            (2.0, 3.0, 49.0 / 4.0),
            (1.5, 4.0, 3425.0 / 36.0),
        ];
        for (a, b, d2) in frozen {
            assert_relative_eq!(hj_pair_distance_sq_closed(a, b), d2, max_relative = 1e-13);
            assert_relative_eq!(hj_pair_distance_sq_closed(b, a), d2, max_relative = 1e-13);
            assert_relative_eq!(hj_pair_distance(a, b).powi(2), d2, max_relative = 1e-11);
        }
    }

    #[test]
    fn default_run_passes() {
        let rep = run(&AConfig::default(), &Artifacts::none()).unwrap();
        assert!(rep.all_passed(), "{}", rep.summary());
        assert_eq!(rep.claim("A.zero_loss").len(), 4);
        assert_eq!(rep.claim("A.separation").len(), 6);
        assert_eq!(rep.metrics["distinct_zero_loss_solutions"], 4.0);
    }
}
