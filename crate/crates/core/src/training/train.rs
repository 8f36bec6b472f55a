//! The training loop.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{loss_param_grad, AutodiffError, LossPoint, LossSpec, ParamGrad, SquaredError};
use crate::mlp::MlpParams;
use crate::problems::{CauchyProblem, CollocationSet};
use crate::scalar::Scalar;

use super::loss::{initial_points, interior_points, LossWeights, SquaredResidual};
use super::optim::{step_adam, step_sgd, AdamState, OptimError, OptimizerKind};
use super::precision::flush_gradient;

/// Losses above this are treated as divergence.
pub const DIVERGENCE_LOSS: f64 = 1e12;

/// Per-step mini-batch sizes; `None` uses every point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchSpec {
    pub interior: Option<usize>,
    pub initial: Option<usize>,
    pub data: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    /// Defaults to 1e-2 for SGD and 1e-3 for Adam.
    pub lr: Option<f64>,
    pub steps: usize,
    pub batch: BatchSpec,
    pub weights: LossWeights,
    /// Mantissa bits `p`; gradients below `2^{−p}` are flushed per sample.
    pub precision_bits: Option<u32>,
    pub seed: u64,
    pub log_every: usize,
    pub checkpoint_every: Option<usize>,
    pub freeze_biases: bool,
    pub adam: AdamHyper,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            lr: None,
            steps: 1000,
            batch: BatchSpec::default(),
            weights: LossWeights::default(),
            precision_bits: None,
            seed: 0,
            log_every: 10,
            checkpoint_every: None,
            freeze_biases: false,
            adam: AdamHyper::default(),
        }
    }
}

impl TrainConfig {
    pub fn learning_rate(&self) -> f64 {
        self.lr.unwrap_or(self.optimizer.default_lr())
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        let lr = self.learning_rate();
        if !(lr.is_finite() && lr > 0.0) {
            return bad(format!("learning rate must be positive, got {lr}"));
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if !self.weights.is_valid() {
            return bad(format!("loss weights must be non-negative and not all zero: {:?}", self.weights));
        }
        if let Some(p) = self.precision_bits {
            if !(2..=1000).contains(&p) {
                return bad(format!("precision bits must be at least 2, got {p}"));
            }
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1".into());
        }
        if self.checkpoint_every == Some(0) {
            return bad("checkpoint_every must be at least 1".into());
        }
        let b = [self.batch.interior, self.batch.initial, self.batch.data];
        if b.contains(&Some(0)) {
            return bad("batch sizes must be at least 1".into());
        }
        let a = self.adam;
        if !((0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.eps >= 0.0 && a.eps.is_finite()) {
            return bad(format!("invalid Adam hyperparameters {a:?}"));
        }
        Ok(())
    }
}

/// What to fit: the PINN objective, reference samples, or both.
#[derive(Clone, Copy)]
pub struct TrainTarget<'a, T> {
    pub pinn: Option<(&'a CauchyProblem<T>, &'a CollocationSet<T>)>,
    pub samples: Option<&'a [LossPoint<T>]>,
}

impl<'a, T: Scalar> TrainTarget<'a, T> {
    pub fn pinn(problem: &'a CauchyProblem<T>, colloc: &'a CollocationSet<T>) -> Self {
        Self { pinn: Some((problem, colloc)), samples: None }
    }

    pub fn data(samples: &'a [LossPoint<T>]) -> Self {
        Self { pinn: None, samples: Some(samples) }
    }

    pub fn with_samples(mut self, samples: &'a [LossPoint<T>]) -> Self {
        self.samples = Some(samples);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: usize,
    pub loss_total: f64,
    pub loss_res: f64,
    pub loss_ic: f64,
    pub loss_data: f64,
    pub w_norm: f64,
    pub g_norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }

    pub fn write_csv_to<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), csv::Error> {
        self.write_csv_to(std::fs::File::create(path)?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum StopReason {
    Completed,
    /// The (flushed) gradient was exactly zero, so no further update can
    /// change the parameters.
    Converged { step: usize },
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub params: MlpParams<T>,
    pub log: TrainLog,
    pub stop: StopReason,
    pub steps_run: usize,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("nothing to train on")]
    EmptyTarget,
    #[error("loss {loss:e} exceeded the divergence threshold at step {step}")]
    Diverged { step: usize, loss: f64, log: TrainLog },
    #[error("step {step}: {source}")]
    Autodiff { step: usize, source: AutodiffError, log: TrainLog },
    #[error("step {step}: {source}")]
    Optim { step: usize, source: OptimError, log: TrainLog },
}

impl TrainError {
    pub fn log(&self) -> Option<&TrainLog> {
        match self {
            TrainError::Diverged { log, .. } | TrainError::Autodiff { log, .. } | TrainError::Optim { log, .. } => {
                Some(log)
            }
            _ => None,
        }
    }
}

fn pick<T: Copy>(all: &[T], k: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<T> {
    match k {
        Some(k) if k < all.len() => {
            let mut idx = rand::seq::index::sample(rng, all.len(), k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| all[i]).collect()
        }
        _ => all.to_vec(),
    }
}

/// [`train_with`] without checkpoint callbacks.
pub fn train<T: Scalar>(
    net: &MlpParams<T>,
    target: TrainTarget<'_, T>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>, TrainError> {
    train_with(net, target, cfg, &mut |_, _| {})
}

/// Runs `cfg.steps` optimizer steps from `net`. `on_checkpoint(step, params)`
/// is called every `checkpoint_every` steps. `steps = 0` returns `net`
/// unchanged.
pub fn train_with<T: Scalar>(
    net: &MlpParams<T>,
    target: TrainTarget<'_, T>,
    cfg: &TrainConfig,
    on_checkpoint: &mut dyn FnMut(usize, &MlpParams<T>),
) -> Result<TrainOutcome<T>, TrainError> {
    if cfg.steps == 0 {
        return Ok(TrainOutcome { params: net.clone(), log: TrainLog::default(), stop: StopReason::Completed, steps_run: 0 });
    }
    cfg.validate()?;
    if target.pinn.is_none() && target.samples.is_none_or(|s| s.is_empty()) {
        return Err(TrainError::EmptyTarget);
    }

    let (interior, initial, residual, volume, width) = match target.pinn {
        Some((p, c)) => (
            interior_points(c),
            initial_points(p, c),
            Some(SquaredResidual { op: p.operator }),
            p.domain.volume(),
            p.domain.width(),
        ),
        None => (Vec::new(), Vec::new(), None, T::one(), T::one()),
    };
    let samples = target.samples.unwrap_or(&[]);
    let w = cfg.weights;
    let lr = T::lit(cfg.learning_rate());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = net.clone();
    let mut adam = AdamState::new(params.num_params(), T::lit(cfg.adam.beta1), T::lit(cfg.adam.beta2), T::lit(cfg.adam.eps));
    let mut log = TrainLog::default();
    let flush = cfg.precision_bits.map(|p| move |g: &mut ParamGrad<T>| {
        flush_gradient(g, p, T::one());
    });

    for step in 0..cfg.steps {
        let bi = pick(&interior, cfg.batch.interior, &mut rng);
        let b0 = pick(&initial, cfg.batch.initial, &mut rng);
        let bd = pick(samples, cfg.batch.data, &mut rng);
        let mut spec = LossSpec::new();
        let mut slots = [None; 3];
        if let Some(r) = &residual {
            slots[0] = Some(spec.groups.len());
            spec = spec.group(&bi, r, volume, T::lit(w.res));
            slots[1] = Some(spec.groups.len());
            spec = spec.group(&b0, &SquaredError, width, T::lit(w.ic));
        }
        if !bd.is_empty() {
            slots[2] = Some(spec.groups.len());
            spec = spec.group(&bd, &SquaredError, T::one(), T::lit(w.data));
        }
        let hook = flush.as_ref().map(|f| f as &(dyn Fn(&mut ParamGrad<T>) + Sync));
        let mut ev = match loss_param_grad(&params, &spec, hook) {
            Ok(ev) => ev,
            Err(source) => return Err(TrainError::Autodiff { step, source, log }),
        };
        if cfg.freeze_biases {
            ev.grad.zero_biases();
        }
        let part = |k: usize| slots[k].map_or(0.0, |i| ev.parts[i].to_f64_lossy());
        let total = ev.total.to_f64_lossy();
        let row = LogRow {
            step,
            loss_total: total,
            loss_res: part(0),
            loss_ic: part(1),
            loss_data: part(2),
            w_norm: params.norm().to_f64_lossy(),
            g_norm: ev.grad.norm().to_f64_lossy(),
        };
        let last = step + 1 == cfg.steps;
        if !(total <= DIVERGENCE_LOSS) {
            log.rows.push(row);
            return Err(TrainError::Diverged { step, loss: total, log });
        }
        let converged = ev.grad.is_zero();
        if step % cfg.log_every == 0 || last || converged {
            log.rows.push(row);
        }
        if converged {
            return Ok(TrainOutcome { params, log, stop: StopReason::Converged { step }, steps_run: step });
        }
        let res = match cfg.optimizer {
            OptimizerKind::Sgd => step_sgd(&mut params, &ev.grad, lr),
            OptimizerKind::Adam => step_adam(&mut params, &ev.grad, &mut adam, lr),
        };
        if let Err(source) = res {
            return Err(TrainError::Optim { step, source, log });
        }
        if let Some(every) = cfg.checkpoint_every {
            if (step + 1) % every == 0 {
                on_checkpoint(step + 1, &params);
            }
        }
    }
    Ok(TrainOutcome { params, log, stop: StopReason::Completed, steps_run: cfg.steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::constructions::unit_indicator;
    use crate::problems::{make_transport, sample_collocation, InitialCondition, Sampler};
    use crate::training::precision::{exact_sigmoid_step_error, w_prime};

    fn step_samples(k: usize) -> Vec<LossPoint<f64>> {
        let dx = 2.0 / k as f64;
        (0..=k)
            .map(|i| {
                let x = -1.0 + i as f64 * dx;
                LossPoint::new(x, 0.0, unit_indicator(x))
            })
            .collect()
    }

    fn neuron(w: f64) -> MlpParams<f64> {
        let mut net = MlpParams::<f64>::zeros(&[1, 1], Activation::Sigmoid)
            .unwrap()
            .with_output_activation(Some(Activation::Sigmoid));
        net.layers[0].weights[0] = w;
        net
    }

    fn neuron_cfg(p: u32, steps: usize) -> TrainConfig {
        TrainConfig {
            optimizer: OptimizerKind::Sgd,
            lr: Some(200.0),
            steps,
            precision_bits: Some(p),
            freeze_biases: true,
            log_every: 1,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_steps_is_identity() {
        let net = MlpParams::<f64>::init(&[2, 5, 1], Activation::Tanh, 1).unwrap();
        let s = step_samples(10);
        let cfg = TrainConfig { steps: 0, ..TrainConfig::default() };
        let out = train(&net, TrainTarget::data(&s), &cfg).unwrap();
        assert_eq!(out.params, net);
        assert!(out.log.rows.is_empty());
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        let cases = [
            TrainConfig { lr: Some(-1.0), ..ok.clone() },
            TrainConfig { steps: 0, ..ok.clone() },
            TrainConfig { weights: LossWeights { res: 0.0, ic: 0.0, data: 0.0 }, ..ok.clone() },
            TrainConfig { precision_bits: Some(1), ..ok.clone() },
            TrainConfig { log_every: 0, ..ok.clone() },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert_eq!(TrainConfig { optimizer: OptimizerKind::Sgd, ..ok }.learning_rate(), 1e-2);
    }

    #[test]
    fn pinn_training_is_deterministic_and_reduces_loss() {
        let p = make_transport(1.0_f64, 0.0, InitialCondition::half_sine());
        let c = sample_collocation(&p.domain, Sampler::Uniform { interior: 300, initial: 60, seed: 3 }).unwrap();
        let net = MlpParams::<f64>::init(&[2, 16, 1], Activation::Tanh, 7).unwrap();
        let cfg = TrainConfig {
            steps: 150,
            lr: Some(1e-2),
            batch: BatchSpec { interior: Some(100), ..BatchSpec::default() },
            seed: 11,
            ..TrainConfig::default()
        };
        let mut checkpoints = Vec::new();
        let a = train_with(&net, TrainTarget::pinn(&p, &c), &TrainConfig { checkpoint_every: Some(50), ..cfg.clone() }, &mut |s, _| checkpoints.push(s))
            .unwrap();
        let b = train(&net, TrainTarget::pinn(&p, &c), &cfg).unwrap();
        assert_eq!(checkpoints, vec![50, 100, 150]);
        assert_eq!(a.log, b.log);
        assert_eq!(a.params, b.params);
        let first = a.log.rows[0];
        let last = a.log.last().unwrap();
        assert!(last.loss_total < 0.5 * first.loss_total, "{first:?} -> {last:?}");
        for r in &a.log.rows {
            assert_eq!(r.loss_total, r.loss_res + r.loss_ic);
        }
        assert!(a.log.rows.windows(2).all(|w| w[0].step < w[1].step));
        let csv = a.log.to_csv_string();
        assert!(csv.starts_with("step,loss_total,loss_res,loss_ic,loss_data,w_norm,g_norm\n"));
    }

    #[test]
    fn all_flushed_gradient_converges() {
        // At w = 400 every sample is farther than (p−1)log2/w from the jump.
        let s = step_samples(20);
        let out = train(&neuron(400.0), TrainTarget::data(&s), &neuron_cfg(10, 100)).unwrap();
        assert_eq!(out.stop, StopReason::Converged { step: 0 });
        assert_eq!(out.params, neuron(400.0));
    }

    #[test]
    fn single_neuron_weight_grows_then_stalls_below_bound() {
        let s = step_samples(20);
        let mut finals = Vec::new();
        for p in [8, 12, 16] {
            let out = train(&neuron(1.0), TrainTarget::data(&s), &neuron_cfg(p, 20_000)).unwrap();
            let ws: Vec<f64> = out.log.rows.iter().map(|r| r.w_norm).collect();
            assert!(ws.windows(2).all(|w| w[1] >= w[0]), "p = {p}: weight not monotone");
            let w_stop = out.params.layers[0].weights[0];
            assert!(w_stop <= w_prime(p, 0.1), "p = {p}: {w_stop} > {}", w_prime(p, 0.1));
            assert!(matches!(out.stop, StopReason::Converged { .. }), "p = {p}: {:?}", out.stop);
            finals.push(w_stop);
        }
        assert!(finals.windows(2).all(|w| w[1] >= w[0]), "{finals:?}");
        assert!(exact_sigmoid_step_error(finals[0]) > exact_sigmoid_step_error(finals[2]));
    }

    #[test]
    fn divergence_is_reported_with_log() {
        let s = vec![LossPoint::new(1.0, 0.0, 1e7)];
        let net = MlpParams::<f64>::zeros(&[1, 1], Activation::Tanh).unwrap();
        let cfg = TrainConfig { optimizer: OptimizerKind::Sgd, lr: Some(1.0), steps: 5, ..TrainConfig::default() };
        match train(&net, TrainTarget::data(&s), &cfg) {
            Err(TrainError::Diverged { step: 0, log, .. }) => assert_eq!(log.rows.len(), 1),
            other => panic!("{other:?}"),
        }
    }
}
