//! Viscous Burgers with a shock at `t ≈ 2/π`: PINN-loss training yields a
//! smooth field that misses the shock, while fitting the same network to
//! reference samples gets much closer but stalls above a floor.

use std::collections::BTreeMap;

use pinn_core::autodiff::{JetEvaluator, LossPoint};
use pinn_core::field::{l2_field_error, l2_row_norm, FieldMeta, Grid1, SolutionField};
use pinn_core::problems::{make_burgers, sample_collocation, Sampler};
use pinn_core::solvers::burgers::{solve_burgers_spectral, SpectralConfig};
use pinn_core::training::{train, BatchSpec, OptimizerKind, TrainConfig, TrainLog, TrainTarget};
use pinn_core::{Activation, Mlp};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifacts::Artifacts;
use crate::cache::{CachedField, ReferenceCache};
use crate::plot::{heatmap, t_slices, LinePlot};
use crate::render::{slice_key, SLICE_TIMES};
use crate::report::{Comparison, ExperimentReport, Verdict};
use crate::{ExperimentError, NetSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EConfig {
    pub reference: SpectralConfig,
    pub ref_dx: f64,
    pub ref_dt: f64,
    pub net: NetSpec,
    pub pinn_adam: TrainConfig,
    pub pinn_sgd: TrainConfig,
    pub interior: usize,
    pub initial: usize,
    pub colloc_seed: u64,
    pub data: TrainConfig,
    pub data_samples: usize,
    pub data_seed: u64,
    pub widths: Vec<usize>,
    pub depths: Vec<usize>,
    pub depth_width: usize,
    /// Steps for each width/depth sweep run.
    pub sweep_steps: usize,
    pub smooth_max_ux: f64,
    pub shock_min_ux: f64,
    pub data_factor: f64,
    pub data_floor: f64,
}

impl Default for EConfig {
    fn default() -> Self {
        let batch = BatchSpec { interior: Some(256), initial: Some(128), data: None };
        Self {
            reference: SpectralConfig::default(),
            ref_dx: 0.001,
            ref_dt: 0.01,
            net: NetSpec { sizes: vec![2, 64, 64, 1], activation: Activation::Sigmoid, seed: 3 },
            pinn_adam: TrainConfig { optimizer: OptimizerKind::Adam, steps: 20_000, batch, log_every: 100, seed: 5, ..TrainConfig::default() },
            pinn_sgd: TrainConfig { optimizer: OptimizerKind::Sgd, steps: 20_000, batch, log_every: 100, seed: 5, ..TrainConfig::default() },
            interior: 10_000,
            initial: 512,
            colloc_seed: 1,
            data: TrainConfig {
                optimizer: OptimizerKind::Adam,
                steps: 20_000,
                batch: BatchSpec { data: Some(512), ..BatchSpec::default() },
                log_every: 100,
                seed: 5,
                ..TrainConfig::default()
            },
            data_samples: 50_000,
            data_seed: 7,
            widths: vec![2, 4, 8, 16, 32, 64],
            depths: vec![1, 2, 3, 4],
            depth_width: 4,
            sweep_steps: 5000,
            smooth_max_ux: 20.0,
            shock_min_ux: 100.0,
            data_factor: 5.0,
            data_floor: 1e-3,
        }
    }
}

/// Reference Burgers field on `[−1, 1] × [0, 1]`, from the cache when
/// available. The summary carries `max_abs_ux_final`.
pub fn reference(cfg: &EConfig, cache: &ReferenceCache) -> Result<CachedField, ExperimentError> {
    let gx = Grid1::with_spacing(-1.0, 1.0, cfg.ref_dx)?;
    let gt = Grid1::with_spacing(0.0, 1.0, cfg.ref_dt)?;
    let params = ("burgers-spectral", cfg.reference, gx, gt);
    Ok(cache.get_or_compute(&params, || {
        let (field, hist) = solve_burgers_spectral::<f64>(&cfg.reference, gx, gt).map_err(|e| e.to_string())?;
        let last = hist.times.len() - 1;
        let summary = BTreeMap::from([
            ("max_abs_ux_final".to_string(), hist.max_abs_ux(last, &gx)),
            ("mass_final".to_string(), hist.mass(last)),
        ]);
        Ok((field, summary))
    })?)
}

/// Network values on the reference grid.
pub fn net_field(net: &Mlp, like: &SolutionField<f64>, name: &str) -> Result<SolutionField<f64>, ExperimentError> {
    let mut values = Vec::with_capacity(like.values.len());
    for j in 0..like.t.n {
        let t = like.t.point(j);
        for i in 0..like.x.n {
            values.push(net.eval(&[like.x.point(i), t])?);
        }
    }
    Ok(SolutionField::new(like.x, like.t, values, FieldMeta::new(name))?)
}

/// `max |∂u/∂x|` of the network at `t` over the points of `x`.
pub fn net_max_abs_ux(net: &Mlp, x: &Grid1, t: f64) -> Result<f64, ExperimentError> {
    let mut ev = JetEvaluator::new(net)?;
    let mut m: f64 = 0.0;
    for xi in x.points() {
        m = m.max(ev.eval(xi, t)?.dx.abs());
    }
    Ok(m)
}

/// `(absolute, relative)` `L²(D)` error against the reference.
pub fn errors(field: &SolutionField<f64>, reference: &SolutionField<f64>) -> Result<(f64, f64), ExperimentError> {
    let abs = l2_field_error(field, reference)?;
    let zero = SolutionField::from_fn(reference.x, reference.t, FieldMeta::new("zero"), |_, _| 0.0)?;
    let norm = l2_field_error(reference, &zero)?;
    Ok((abs, abs / norm))
}

/// Uniform subsample (without replacement) of the reference grid.
pub fn data_samples(reference: &SolutionField<f64>, count: usize, seed: u64) -> Vec<LossPoint<f64>> {
    let total = reference.values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, total, count.min(total)).into_vec();
    idx.sort_unstable();
    idx.into_iter()
        .map(|k| {
            let (i, j) = (k % reference.x.n, k / reference.x.n);
            LossPoint::new(reference.x.point(i), reference.t.point(j), reference.values[k])
        })
        .collect()
}

fn log_rows(log: &TrainLog) -> Vec<Vec<f64>> {
    log.rows.iter().map(|r| vec![r.step as f64, r.loss_total, r.loss_res, r.loss_ic, r.loss_data, r.w_norm, r.g_norm]).collect()
}

const LOG_HEADER: [&str; 7] = ["step", "loss_total", "loss_res", "loss_ic", "loss_data", "w_norm", "g_norm"];

pub fn run(cfg: &EConfig, cache: &ReferenceCache, out: &Artifacts) -> Result<ExperimentReport, ExperimentError> {
    let mut rep = ExperimentReport::new("E", cfg, cfg.pinn_adam.seed);
    let reference = reference(cfg, cache)?;
    rep.provenance.cache_keys.push(reference.key.clone());
    let refield = &reference.field;
    let ref_ux = reference.summary.get("max_abs_ux_final").copied().unwrap_or(f64::NAN);
    rep.metric("reference.max_abs_ux_t1", ref_ux);

    let problem = make_burgers(cfg.reference.mu, cfg.reference.nu)?;
    let colloc = sample_collocation(
        &problem.domain,
        Sampler::Uniform { interior: cfg.interior, initial: cfg.initial, seed: cfg.colloc_seed },
    )?;
    let init = cfg.net.build()?;
    let gx = refield.x;

    let mut pinn = Vec::new();
    for (name, tc) in [("adam", &cfg.pinn_adam), ("sgd", &cfg.pinn_sgd)] {
        let o = train(&init, TrainTarget::pinn(&problem, &colloc), tc)?;
        let f = net_field(&o.params, refield, &format!("pinn-{name}"))?;
        let (abs, rel) = errors(&f, refield)?;
        let ux = net_max_abs_ux(&o.params, &gx, 1.0)?;
        rep.metric(format!("pinn_{name}.l2_error"), abs);
        rep.metric(format!("pinn_{name}.rel_l2_error"), rel);
        rep.metric(format!("pinn_{name}.max_abs_ux_t1"), ux);
        rep.metric(format!("pinn_{name}.final_loss"), o.log.last().map_or(f64::NAN, |r| r.loss_total));
        rep.verdict(Verdict::check(
            format!("E.pinn_smooth.{name}"),
            format!("PINN-loss solution ({name}) stays smooth: max |u_x(., 1)|"),
            Comparison::Below,
            cfg.smooth_max_ux,
            ux,
            0.0,
        ));
        out.csv(&format!("train_log_pinn_{name}.csv"), &LOG_HEADER, &log_rows(&o.log))?;
        pinn.push((name, o, f, rel));
    }
    rep.verdict(Verdict::check(
        "E.reference_shock",
        "reference develops a shock: max |u_x(., 1)|",
        Comparison::Above,
        cfg.shock_min_ux,
        ref_ux,
        0.0,
    ));

    let samples = data_samples(refield, cfg.data_samples, cfg.data_seed);
    let fit = train(&init, TrainTarget::data(&samples), &cfg.data)?;
    let fit_field = net_field(&fit.params, refield, "data-fit")?;
    let (fit_abs, fit_rel) = errors(&fit_field, refield)?;
    rep.metric("data.l2_error", fit_abs);
    rep.metric("data.rel_l2_error", fit_rel);
    rep.metric("data.max_abs_ux_t1", net_max_abs_ux(&fit.params, &gx, 1.0)?);
    out.csv("train_log_data.csv", &LOG_HEADER, &log_rows(&fit.log))?;
    let best_pinn = pinn.iter().map(|p| p.3).fold(f64::INFINITY, f64::min);
    rep.verdict(Verdict::check(
        "E.data_beats_pinn",
        "best PINN-loss relative error over data-fit relative error",
        Comparison::AtLeast,
        cfg.data_factor,
        best_pinn / fit_rel,
        0.0,
    ));
    rep.verdict(Verdict::check(
        "E.data_floor",
        "data-fit absolute L2 error stays above the floor",
        Comparison::Above,
        cfg.data_floor,
        fit_abs,
        0.0,
    ));
    // The initial slice is part of the training data, so it should fit no
    // worse than the field as a whole.
    let ic_diff: Vec<f64> = fit_field.row(0).iter().zip(refield.row(0)).map(|(a, b)| a - b).collect();
    let ic_err = l2_row_norm(&refield.x, &ic_diff);
    rep.metric("data.ic_l2_error", ic_err);
    rep.verdict(Verdict::check(
        "E.data_ic",
        "data-fit t = 0 slice error is within the trained L2 error",
        Comparison::AtMost,
        fit_abs,
        ic_err,
        0.0,
    ));

    let sweep = |sizes: Vec<usize>| -> Result<f64, ExperimentError> {
        let spec = NetSpec { sizes, ..cfg.net.clone() };
        let tc = TrainConfig { steps: cfg.sweep_steps, ..cfg.data.clone() };
        let o = train(&spec.build()?, TrainTarget::data(&samples), &tc)?;
        Ok(errors(&net_field(&o.params, refield, "sweep")?, refield)?.1)
    };
    let mut width_err = Vec::new();
    for &w in &cfg.widths {
        let e = sweep(vec![2, w, w, 1])?;
        rep.metric(format!("width.{w}.rel_l2_error"), e);
        width_err.push(e);
    }
    let mut depth_err = Vec::new();
    for &d in &cfg.depths {
        let mut sizes = vec![2];
        sizes.extend(std::iter::repeat_n(cfg.depth_width, d));
        sizes.push(1);
        let e = sweep(sizes)?;
        rep.metric(format!("depth.{d}.rel_l2_error"), e);
        depth_err.push(e);
    }
    rep.series("widths", cfg.widths.iter().map(|&w| w as f64).collect());
    rep.series("width_rel_l2_error", width_err.clone());
    rep.series("depths", cfg.depths.iter().map(|&d| d as f64).collect());
    rep.series("depth_rel_l2_error", depth_err.clone());
    for (name, o, _, _) in &pinn {
        rep.series(format!("pinn_{name}.loss"), o.log.rows.iter().map(|r| r.loss_total).collect());
    }
    rep.series("data.loss", fit.log.rows.iter().map(|r| r.loss_total).collect());
    let stride = (gx.n / 500).max(1);
    let cols: Vec<usize> = (0..gx.n).step_by(stride).collect();
    for (k, &t) in SLICE_TIMES.iter().enumerate() {
        let j = refield.t.nearest(t);
        rep.series(slice_key(k, "x"), cols.iter().map(|&i| gx.point(i)).collect());
        let mut put = |name: &str, f: &SolutionField<f64>| rep.series(slice_key(k, name), cols.iter().map(|&i| f.at(i, j)).collect());
        put("reference", refield);
        put("data_fit", &fit_field);
        for (name, _, f, _) in &pinn {
            put(&format!("pinn_{name}"), f);
        }
    }

    out.svg("reference_heatmap", || heatmap(refield, "reference (spectral)", 200))?;
    out.svg("data_fit_heatmap", || heatmap(&fit_field, "data-fit network", 200))?;
    for (name, _, f, _) in &pinn {
        out.svg(&format!("pinn_{name}_heatmap"), || heatmap(f, &format!("PINN loss, {name}"), 200))?;
    }
    out.svg("t_slices", || {
        let (_, _, adam, _) = &pinn[0];
        t_slices(&[("reference", refield), ("pinn", adam), ("data", &fit_field)], "u(x, t) at five times")
    })?;
    out.svg("training_curves", || {
        let mut p = LinePlot::new("training loss", "step", "loss");
        p.log_y = true;
        for (name, o, _, _) in &pinn {
            p.add(&format!("PINN {name}"), o.log.rows.iter().map(|r| (r.step as f64, r.loss_total)).collect());
        }
        p.add("data fit", fit.log.rows.iter().map(|r| (r.step as f64, r.loss_total)).collect());
        p.to_svg()
    })?;
    out.svg("error_vs_width", || {
        let mut p = LinePlot::new("data-fit error vs width", "width", "relative L2 error").log_log().with_markers();
        p.add("data fit", cfg.widths.iter().map(|&w| w as f64).zip(width_err.iter().copied()).collect());
        p.to_svg()
    })?;
    out.svg("error_vs_depth", || {
        let mut p = LinePlot::new("data-fit error vs depth", "hidden layers", "relative L2 error").with_markers();
        p.add("data fit", cfg.depths.iter().map(|&d| d as f64).zip(depth_err.iter().copied()).collect());
        p.to_svg()
    })?;
    out.report(&rep)?;
    Ok(rep)
}
