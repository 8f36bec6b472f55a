use pinn_core::autodiff::{jet_eval, JetEvaluator};
use pinn_core::field::{l2_field_error, FieldMeta, Grid1, SolutionField};
use pinn_core::problems::{make_burgers, make_hamilton_jacobi, make_heat, make_transport, sample_collocation, InitialCondition, Sampler};
use pinn_core::solvers::burgers::{integrate_spectral, SpectralConfig};
use pinn_core::solvers::hj::{hj_jet, near_kink};
use pinn_core::training::{pinn_loss, pinn_loss_of, train, LossWeights, OptimizerKind, TrainConfig, TrainTarget};
use pinn_core::{Activation, CauchyProblem, MlpParams, Problem};
use proptest::prelude::*;

fn act(k: u8) -> Activation {
    [Activation::Sigmoid, Activation::Tanh, Activation::Relu][k as usize % 3]
}

fn sizes(depth: usize, width: usize) -> Vec<usize> {
    let mut s = vec![2];
    s.extend(std::iter::repeat_n(width, depth));
    s.push(1);
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jet_value_is_the_forward_pass(seed in any::<u64>(), depth in 1usize..=4, width in 1usize..=8, k in 0u8..3,
                                     x in -1.0..1.0_f64, t in 0.0..1.0_f64) {
        let net = MlpParams::<f64>::init(&sizes(depth, width), act(k), seed).unwrap();
        prop_assert_eq!(jet_eval(&net, x, t).unwrap().val.to_bits(), net.eval(&[x, t]).unwrap().to_bits());
        let net32: MlpParams<f32> = net.cast();
        let (x32, t32) = (x as f32, t as f32);
        prop_assert_eq!(jet_eval(&net32, x32, t32).unwrap().val.to_bits(), net32.eval(&[x32, t32]).unwrap().to_bits());
    }

    #[test]
    fn jets_scale_with_a_linear_output_layer(seed in any::<u64>(), a in -3.0..3.0_f64, x in -1.0..1.0_f64, t in 0.0..1.0_f64) {
        let net = MlpParams::<f64>::init(&[2, 5, 5, 1], Activation::Tanh, seed).unwrap();
        let mut scaled = net.clone();
        let last = scaled.layers.last_mut().unwrap();
        last.weights.iter_mut().for_each(|w| *w *= a);
        last.bias.iter_mut().for_each(|b| *b *= a);
        let (u, v) = (jet_eval(&net, x, t).unwrap(), jet_eval(&scaled, x, t).unwrap());
        for (p, q) in [(u.val, v.val), (u.dx, v.dx), (u.dt, v.dt), (u.dxx, v.dxx)] {
            prop_assert!((a * p - q).abs() <= 1e-12 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn exact_solutions_have_zero_discrete_residual(seed in any::<u64>(), b in -2.0..2.0_f64, c in -1.0..1.0_f64) {
        let problems: Vec<Problem> = vec![
            make_transport(b, c, InitialCondition::half_sine()),
            make_heat(InitialCondition::Gaussian { mean: 0.2, variance: 0.5 }),
            make_heat(InitialCondition::Constant { value: 2.0 }),
            CauchyProblem { initial: InitialCondition::Constant { value: 0.7 }, ..make_burgers(-1.0, 1e-3).unwrap() },
            make_hamilton_jacobi(),
        ];
        for p in &problems {
            let colloc = sample_collocation(&p.domain, Sampler::Uniform { interior: 200, initial: 50, seed }).unwrap();
            let loss = pinn_loss_of(|x, t| p.exact_jet(x, t), p, &colloc, &LossWeights::default());
            prop_assert!(loss.residual < 1e-10, "{}: {}", p.name(), loss.residual);
        }
    }

    #[test]
    fn l2_field_error_is_a_metric(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let g = Grid1::new(-1.0, 1.0, 17).unwrap();
        let h = Grid1::new(0.0, 1.0, 9).unwrap();
        let field = |s: u64| {
            let k = (s % 1000) as f64 / 100.0;
            SolutionField::from_fn(g, h, FieldMeta::new("r"), move |x: f64, t| (k * x + t).sin() * (1.0 + k)).unwrap()
        };
        let (a, b, c) = (field(s1), field(s2), field(s3));
        let ab = l2_field_error(&a, &b).unwrap();
        prop_assert!((ab - l2_field_error(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert!(ab <= l2_field_error(&a, &c).unwrap() + l2_field_error(&c, &b).unwrap() + 1e-12);
        prop_assert_eq!(l2_field_error(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn total_loss_is_the_weighted_sum(seed in any::<u64>(), wr in 0.0..3.0_f64, wi in 0.0..3.0_f64) {
        let p = make_burgers(-1.0, 1e-2).unwrap();
        let net = MlpParams::<f64>::init(&[2, 6, 1], Activation::Sigmoid, seed).unwrap();
        let colloc = sample_collocation(&p.domain, Sampler::Uniform { interior: 40, initial: 10, seed }).unwrap();
        let w = LossWeights { res: wr, ic: wi, data: 1.0 };
        let l = pinn_loss(&net, &p, &colloc, &w).unwrap();
        prop_assert_eq!(l.total, wr * l.residual + wi * l.ic);
    }
}

#[test]
fn hj_family_residual_vanishes_off_the_kinks() {
    let p = make_hamilton_jacobi::<f64>();
    let (gx, gt) = (Grid1::new(-1.0, 1.0, 201).unwrap(), Grid1::new(0.0, 1.0, 101).unwrap());
    for a in [0.5, 1.0, 2.0, 4.0] {
        for t in gt.points() {
            for x in gx.points() {
                if near_kink(a, x, t, 1e-9) {
                    continue;
                }
                assert_eq!(p.residual(&hj_jet(a, x, t)), 0.0, "a={a} x={x} t={t}");
            }
        }
    }
}

#[test]
fn burgers_mass_is_conserved() {
    let cfg = SpectralConfig { mu: -1.0, nu: 1e-2, modes: 512, dt: 1e-3 };
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
    let hist = integrate_spectral::<f64>(&cfg, &times).unwrap();
    let m0 = hist.mass(0);
    for j in 1..times.len() {
        assert!((hist.mass(j) - m0).abs() < 1e-8, "row {j}: {} vs {m0}", hist.mass(j));
    }
}

#[test]
fn training_is_bitwise_deterministic() {
    let p = make_transport(1.0, 0.0, InitialCondition::half_sine());
    let colloc = sample_collocation(&p.domain, Sampler::Uniform { interior: 300, initial: 40, seed: 4 }).unwrap();
    let net = MlpParams::<f64>::init(&[2, 8, 8, 1], Activation::Tanh, 2).unwrap();
    for optimizer in [OptimizerKind::Sgd, OptimizerKind::Adam] {
        let mut cfg = TrainConfig { optimizer, steps: 60, log_every: 1, seed: 11, ..TrainConfig::default() };
        cfg.batch.interior = Some(64);
        cfg.batch.initial = Some(16);
        let a = train(&net, TrainTarget::pinn(&p, &colloc), &cfg).unwrap();
        let b = train(&net, TrainTarget::pinn(&p, &colloc), &cfg).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.params, b.params);
    }
}

#[test]
fn evaluator_reuse_matches_fresh_evaluation() {
    let net = MlpParams::<f64>::init(&[2, 7, 7, 1], Activation::Sigmoid, 5).unwrap();
    let mut ev = JetEvaluator::new(&net).unwrap();
    for k in 0..50 {
        let (x, t) = (-1.0 + 0.04 * k as f64, 0.02 * k as f64);
        assert_eq!(ev.eval(x, t).unwrap(), jet_eval(&net, x, t).unwrap());
    }
}
