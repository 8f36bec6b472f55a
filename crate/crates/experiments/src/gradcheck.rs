//! Parameter gradients from the jet tape against fourth-order central
//! differences of the loss value, over random networks, points and
//! objectives.

use std::time::Instant;

use pinn_core::autodiff::{loss_param_grad, loss_value, LossPoint, LossSpec, PointObjective, SquaredError};
use pinn_core::problems::PdeOperator;
use pinn_core::training::SquaredResidual;
use pinn_core::{Activation, Mlp, MlpParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::report::{Comparison, ExperimentReport, Verdict};
use crate::ExperimentError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradCheckConfig {
    pub activations: Vec<Activation>,
    pub configs_per_activation: usize,
    pub seed: u64,
    pub step: f64,
    /// Denominators below this are replaced by it.
    pub floor: f64,
    /// ReLU configurations with a pre-activation closer than this to zero
    /// are redrawn, since differences across the kink are meaningless.
    pub kink_margin: f64,
    pub tolerance: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            activations: vec![Activation::Sigmoid, Activation::Tanh, Activation::Relu],
            configs_per_activation: 100,
            seed: 0,
            step: 1e-5,
            floor: 1e-8,
            kink_margin: 1e-2,
            tolerance: 1e-4,
        }
    }
}

/// One random problem: network, residual points and data points.
pub struct Case {
    pub net: Mlp,
    pub op: PdeOperator<f64>,
    pub interior: Vec<LossPoint<f64>>,
    pub data: Vec<LossPoint<f64>>,
    pub weights: (f64, f64),
}

impl Case {
    pub fn draw(act: Activation, rng: &mut ChaCha8Rng) -> Result<Self, ExperimentError> {
        let depth = rng.gen_range(1..=3);
        let mut sizes = vec![2];
        sizes.extend((0..depth).map(|_| rng.gen_range(1..=6)));
        sizes.push(1);
        let out_act = match rng.gen_range(0..3) {
            0 => Some(act),
            _ => None,
        };
        let mut net = MlpParams::init(&sizes, act, rng.gen())?.with_output_activation(out_act);
        let flat: Vec<f64> = (0..net.num_params()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        net.set_flat(&flat)?;
        let op = match rng.gen_range(0..4) {
            0 => PdeOperator::Transport { b: rng.gen_range(-2.0..2.0), c: rng.gen_range(-1.0..1.0) },
            1 => PdeOperator::HamiltonJacobi,
            2 => PdeOperator::Heat,
            _ => PdeOperator::Burgers { mu: rng.gen_range(-2.0..2.0), nu: rng.gen_range(1e-3..0.1) },
        };
        let point = |rng: &mut ChaCha8Rng| {
            LossPoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0))
        };
        let interior = (0..rng.gen_range(1..=8)).map(|_| point(rng)).collect();
        let data = (0..rng.gen_range(1..=8)).map(|_| point(rng)).collect();
        let weights = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
        Ok(Self { net, op, interior, data, weights })
    }

    fn with_spec<R>(&self, f: impl FnOnce(&LossSpec<'_, f64>) -> R) -> R {
        let res = SquaredResidual { op: self.op };
        let res: &dyn PointObjective<f64> = &res;
        let spec = LossSpec::new()
            .group(&self.interior, res, 2.0, self.weights.0)
            .group(&self.data, &SquaredError, 2.0, self.weights.1);
        f(&spec)
    }

    /// Smallest `|z|` over every hidden and output pre-activation at every
    /// point.
    pub fn min_abs_preactivation(&self) -> f64 {
        let mut m = f64::INFINITY;
        for p in self.interior.iter().chain(&self.data) {
            let mut a = vec![p.x, p.t];
            for (k, l) in self.net.layers.iter().enumerate() {
                let mut z = vec![0.0; l.bias.len()];
                l.affine_into(&a, &mut z);
                m = z.iter().fold(m, |m, v| m.min(v.abs()));
                let act = self.net.activation_after(k);
                a = z.iter().map(|&v| act.map_or(v, |f| f.apply(v))).collect();
            }
        }
        m
    }

    /// Largest relative deviation over all parameters.
    pub fn deviation(&self, step: f64, floor: f64) -> Result<f64, ExperimentError> {
        let grad = self.with_spec(|s| loss_param_grad(&self.net, s, None))?.grad.to_flat();
        let theta = self.net.to_flat();
        let mut probe = self.net.clone();
        let mut value = |flat: &[f64]| -> Result<f64, ExperimentError> {
            probe.set_flat(flat)?;
            Ok(self.with_spec(|s| loss_value(&probe, s))?.total)
        };
        let mut worst: f64 = 0.0;
        let mut th = theta.clone();
        for i in 0..theta.len() {
            let h = step * theta[i].abs().max(1.0);
            let mut at = |k: f64| {
                th[i] = theta[i] + k * h;
                value(&th)
            };
            let (f1, fm1, f2, fm2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
            th[i] = theta[i];
            let fd = (8.0 * (f1 - fm1) - (f2 - fm2)) / (12.0 * h);
            let dev = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(floor);
            worst = worst.max(dev);
        }
        Ok(worst)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckSummary {
    pub activation: Activation,
    pub configs: usize,
    pub redrawn: usize,
    pub max_deviation: f64,
}

pub fn run(cfg: &GradCheckConfig) -> Result<(ExperimentReport, Vec<GradCheckSummary>), ExperimentError> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("gradcheck", cfg, cfg.seed);
    let mut out = Vec::new();
    for (ai, &act) in cfg.activations.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(ai as u64));
        let (mut worst, mut redrawn, mut devs) = (0.0f64, 0, Vec::new());
        while devs.len() < cfg.configs_per_activation {
            let case = Case::draw(act, &mut rng)?;
            if act == Activation::Relu && case.min_abs_preactivation() < cfg.kink_margin {
                redrawn += 1;
                continue;
            }
            let d = case.deviation(cfg.step, cfg.floor)?;
            worst = worst.max(d);
            devs.push(d);
        }
        rep.metric(format!("{}.max_deviation", act.name()), worst);
        rep.metric(format!("{}.redrawn", act.name()), redrawn as f64);
        rep.series(format!("{}.deviation", act.name()), devs);
        rep.verdict(Verdict::check(
            "gradcheck.deviation",
            format!("{} gradients match finite differences", act.name()),
            Comparison::Below,
            cfg.tolerance,
            worst,
            0.0,
        ));
        out.push(GradCheckSummary { activation: act, configs: cfg.configs_per_activation, redrawn, max_deviation: worst });
    }
    rep.metric("seconds", start.elapsed().as_secs_f64());
    Ok((rep, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_few_cases_per_activation_agree() {
        let cfg = GradCheckConfig { configs_per_activation: 5, ..Default::default() };
        let (rep, s) = run(&cfg).unwrap();
        assert!(rep.all_passed(), "{}", rep.summary());
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn a_wrong_gradient_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let case = Case::draw(Activation::Tanh, &mut rng).unwrap();
        // A coarse step makes the difference quotient itself inaccurate.
        assert!(case.deviation(0.5, 1e-8).unwrap() > 1e-4);
    }
}
