//! Step-function limits: explicit networks whose `L²` distance to `χ_[0,1]`
//! goes to zero only as their weights go to infinity, and a bounded
//! sequence with no convergent subsequence.

use pinn_core::constructions::{phi_witness, relu_step_network, sigmoid_step_network, step_l2_error, StepWitness};
use serde::{Deserialize, Serialize};

use crate::artifacts::Artifacts;
use crate::plot::LinePlot;
use crate::report::{Comparison, ExperimentReport, Verdict};
use crate::stats::linear_fit;
use crate::ExperimentError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct D1Config {
    pub ns: Vec<u64>,
    /// Indices of the normalized bumps compared pairwise.
    pub phi_ns: Vec<u32>,
    pub max_error: f64,
    pub slope_tol: f64,
    pub distance_tol: f64,
    pub norm_tol: f64,
}

impl Default for D1Config {
    fn default() -> Self {
        Self {
            ns: vec![10, 100, 1000],
            phi_ns: (1..=8).collect(),
            max_error: 0.05,
            slope_tol: 0.1,
            distance_tol: 1e-9,
            norm_tol: 1e-12,
        }
    }
}

pub fn run(cfg: &D1Config, out: &Artifacts) -> Result<ExperimentReport, ExperimentError> {
    if cfg.ns.len() < 2 || cfg.ns.windows(2).any(|w| w[0] >= w[1]) || cfg.ns[0] == 0 {
        return Err(ExperimentError::Config("ns must be positive, strictly ascending, at least two".into()));
    }
    let mut rep = ExperimentReport::new("D1", cfg, 0);
    let mut rows = Vec::new();
    let (mut e_sig, mut e_relu, mut w_sig, mut w_relu) = (vec![], vec![], vec![], vec![]);
    for &n in &cfg.ns {
        let sig = sigmoid_step_network(&StepWitness::<f64>::unit(n)?);
        let relu = relu_step_network::<f64>(n)?;
        let es = step_l2_error(|x| sig.eval(&[x]).unwrap_or(f64::NAN));
        let er = step_l2_error(|x| relu.eval(&[x]).unwrap_or(f64::NAN));
        let ws = sig.max_abs_weight();
        let wr = relu.layers[0].weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        rep.metric(format!("error.sigmoid.n={n}"), es);
        rep.metric(format!("error.relu.n={n}"), er);
        rep.metric(format!("max_weight.sigmoid.n={n}"), ws);
        rep.metric(format!("max_weight.relu.n={n}"), wr);
        rows.push(vec![n as f64, es, er, ws, wr]);
        e_sig.push(es);
        e_relu.push(er);
        w_sig.push(ws);
        w_relu.push(wr);
    }
    let ns_f: Vec<f64> = cfg.ns.iter().map(|&n| n as f64).collect();
    for (name, e, w) in [("sigmoid", &e_sig, &w_sig), ("relu", &e_relu, &w_relu)] {
        let dec = e.windows(2).all(|p| p[1] < p[0]);
        rep.verdict(Verdict::holds("D1.decreasing", format!("{name} construction error strictly decreases in n"), dec));
        rep.verdict(Verdict::check(
            "D1.small",
            format!("{name} construction error at the largest n"),
            Comparison::Below,
            cfg.max_error,
            *e.last().expect("ns non-empty"),
            0.0,
        ));
        let lx: Vec<f64> = ns_f.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = w.iter().map(|v| v.ln()).collect();
        let slope = linear_fit(&lx, &ly).map_or(f64::NAN, |f| f.0);
        rep.metric(format!("weight_growth_slope.{name}"), slope);
        rep.verdict(Verdict::check(
            "D1.weights",
            format!("{name} max |w| grows linearly in n (log-log slope)"),
            Comparison::RelWithin,
            1.0,
            slope,
            cfg.slope_tol,
        ));
        rep.series(format!("error.{name}"), e.clone());
        rep.series(format!("max_weight.{name}"), w.clone());
    }
    rep.series("n", ns_f.clone());

    let phis = cfg.phi_ns.iter().map(|&n| phi_witness(n)).collect::<Result<Vec<_>, _>>()?;
    let worst_norm = phis.iter().map(|p| (p.l2_norm() - 1.0).abs()).fold(0.0, f64::max);
    rep.metric("phi.worst_norm_deviation", worst_norm);
    rep.verdict(Verdict::check("D1.phi_norm", "normalized bumps have unit L2 norm", Comparison::AtMost, cfg.norm_tol, worst_norm, 0.0));
    let mut worst_dist: f64 = 0.0;
    for (i, p) in phis.iter().enumerate() {
        for q in &phis[i + 1..] {
            worst_dist = worst_dist.max((p.l2_distance(q) - 2f64.sqrt()).abs());
        }
    }
    rep.metric("phi.worst_distance_deviation", worst_dist);
    rep.verdict(Verdict::check(
        "D1.phi_distance",
        "pairwise distances of the normalized bumps equal sqrt(2)",
        Comparison::AtMost,
        cfg.distance_tol,
        worst_dist,
        0.0,
    ));

    out.csv("constructions.csv", &["n", "error_sigmoid", "error_relu", "max_weight_sigmoid", "max_weight_relu"], &rows)?;
    out.svg("error_vs_n", || {
        let mut p = LinePlot::new("distance to the unit step", "n", "L2 error").log_log().with_markers();
        p.add("sigmoid", ns_f.iter().copied().zip(e_sig.iter().copied()).collect());
        p.add("relu", ns_f.iter().copied().zip(e_relu.iter().copied()).collect());
        p.to_svg()
    })?;
    out.svg("weight_vs_n", || {
        let mut p = LinePlot::new("largest weight", "n", "max |w|").log_log().with_markers();
        p.add("sigmoid", ns_f.iter().copied().zip(w_sig.iter().copied()).collect());
        p.add("relu", ns_f.iter().copied().zip(w_relu.iter().copied()).collect());
        p.to_svg()
    })?;
    out.report(&rep)?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_passes() {
        let rep = run(&D1Config::default(), &Artifacts::none()).unwrap();
        assert!(rep.all_passed(), "{}", rep.summary());
        assert_eq!(rep.metrics["max_weight.relu.n=100"], 100.0);
    }

    #[test]
    fn rejects_unsorted_ns() {
        let cfg = D1Config { ns: vec![100, 10], ..D1Config::default() };
        assert!(run(&cfg, &Artifacts::none()).is_err());
    }
}
