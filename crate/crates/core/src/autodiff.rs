//! Parameter gradients of losses built from `u`, `u_x`, `u_t`, `u_xx`.
//!
//! The forward pass pushes second-order jets through the network and
//! records every layer on a tape. The reverse pass then differentiates the
//! whole jet computation with respect to the weights, which gives mixed
//! derivatives such as `∂u_xx/∂W` without nested forward passes.
//!
//! Points are processed in fixed chunks of [`CHUNK`] and partial sums are
//! combined in chunk order, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::{Activation, Derivs};
use crate::jet::Jet2;
use crate::mlp::{MlpError, MlpParams};
use crate::scalar::Scalar;

/// Points per deterministic reduction chunk.
pub const CHUNK: usize = 64;
/// Chunks evaluated concurrently before being folded into the total.
const WINDOW: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum AutodiffError {
    #[error(transparent)]
    Shape(#[from] MlpError),
    #[error("network must map (x) or (x, t) to a scalar, got sizes {0:?}")]
    Arity(Vec<usize>),
    #[error("non-finite value in layer {layer} at point {point} of loss group {group}")]
    NonFinite { layer: usize, point: usize, group: usize },
    #[error("non-finite loss at point {point} of loss group {group}")]
    NonFiniteLoss { point: usize, group: usize },
}

/// Gradient with the same block structure as [`MlpParams`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ParamGrad<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<Vec<T>>,
}

impl<T: Scalar> ParamGrad<T> {
    pub fn zeros_like(net: &MlpParams<T>) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![T::zero(); l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![T::zero(); l.bias.len()]).collect(),
        }
    }

    pub fn is_congruent(&self, net: &MlpParams<T>) -> bool {
        self.weights.len() == net.layers.len()
            && net.layers.iter().enumerate().all(|(k, l)| {
                self.weights[k].len() == l.weights.len() && self.bias[k].len() == l.bias.len()
            })
    }

    pub fn fill_zero(&mut self) {
        for b in self.blocks_mut() {
            b.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    /// Blocks in the same order as [`MlpParams::blocks_mut`].
    pub fn blocks(&self) -> Vec<&[T]> {
        self.weights
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [T]> {
        self.weights
            .iter_mut()
            .zip(self.bias.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = T> + '_ {
        self.weights.iter().zip(&self.bias).flat_map(|(w, b)| w.iter().chain(b).copied())
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.iter().collect()
    }

    pub fn norm(&self) -> T {
        self.iter().map(|v| v * v).sum::<T>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.iter().all(|v| v == T::zero())
    }

    /// `self += k · other`.
    pub fn axpy(&mut self, k: T, other: &Self) {
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = *d + k * *s;
            }
        }
    }

    pub fn scale(&mut self, k: T) {
        for b in self.blocks_mut() {
            b.iter_mut().for_each(|v| *v = *v * k);
        }
    }

    pub fn zero_biases(&mut self) {
        for b in &mut self.bias {
            b.iter_mut().for_each(|v| *v = T::zero());
        }
    }
}

/// One evaluation point. `target` is whatever the objective compares
/// against (initial data, reference value); residual objectives ignore it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossPoint<T> {
    pub x: T,
    pub t: T,
    pub target: T,
}

impl<T: Scalar> LossPoint<T> {
    pub fn new(x: T, t: T, target: T) -> Self {
        Self { x, t, target }
    }
}

/// Per-point loss `ℓ(u)` on the network output jet.
pub trait PointObjective<T: Scalar>: Sync {
    /// `ℓ` and its partials with respect to `(u, u_x, u_t, u_xx)`.
    fn eval(&self, p: &LossPoint<T>, u: Jet2<T>) -> (T, Jet2<T>);

    /// Whether `ℓ` reads any derivative channel. When false only values are
    /// propagated.
    fn needs_derivatives(&self) -> bool {
        true
    }
}

/// `(u − target)²`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SquaredError;

impl<T: Scalar> PointObjective<T> for SquaredError {
    fn eval(&self, p: &LossPoint<T>, u: Jet2<T>) -> (T, Jet2<T>) {
        let e = u.val - p.target;
        (e * e, Jet2::constant(T::lit(2.0) * e))
    }

    fn needs_derivatives(&self) -> bool {
        false
    }
}

/// A set of points sharing one objective. Its part of the loss is
/// `scale · mean ℓ`, and it enters the total with factor `weight`.
pub struct LossGroup<'a, T: Scalar> {
    pub points: &'a [LossPoint<T>],
    pub objective: &'a dyn PointObjective<T>,
    pub scale: T,
    pub weight: T,
}

#[derive(Default)]
pub struct LossSpec<'a, T: Scalar> {
    pub groups: Vec<LossGroup<'a, T>>,
}

impl<'a, T: Scalar> LossSpec<'a, T> {
    pub fn new() -> Self {
        Self { groups: Vec::new() }
    }

    pub fn group(
        mut self,
        points: &'a [LossPoint<T>],
        objective: &'a dyn PointObjective<T>,
        scale: T,
        weight: T,
    ) -> Self {
        self.groups.push(LossGroup { points, objective, scale, weight });
        self
    }
}

/// Loss value, per-group parts and gradient of the total.
#[derive(Clone, Debug)]
pub struct LossEval<T> {
    pub total: T,
    pub parts: Vec<T>,
    pub grad: ParamGrad<T>,
}

/// Hook applied to each point's unscaled gradient `∇θ ℓ(x_i)` before it
/// is averaged in.
pub type SampleHook<'h, T> = &'h (dyn Fn(&mut ParamGrad<T>) + Sync);

/// Tape for one point. `N` is the number of carried channels: 4 for full
/// jets (value, ∂x, ∂t, ∂xx), 1 for values only.
struct Tape<T, const N: usize> {
    acts: Vec<Vec<[T; N]>>,
    pre: Vec<Vec<[T; N]>>,
    derivs: Vec<Vec<Derivs<T>>>,
    adj: Vec<[T; N]>,
    adj_prev: Vec<[T; N]>,
}

impl<T: Scalar, const N: usize> Tape<T, N> {
    fn new(net: &MlpParams<T>) -> Self {
        let z = [T::zero(); N];
        let nil = Derivs { f: T::zero(), d1: T::zero(), d2: T::zero(), d3: T::zero() };
        let sizes = net.sizes();
        let widest = net.widest();
        Self {
            acts: sizes.iter().map(|&s| vec![z; s]).collect(),
            pre: sizes[1..].iter().map(|&s| vec![z; s]).collect(),
            derivs: sizes[1..].iter().map(|&s| vec![nil; s]).collect(),
            adj: vec![z; widest],
            adj_prev: vec![z; widest],
        }
    }

    fn load_input(&mut self, x: T, t: T) {
        let a = &mut self.acts[0];
        let mut ex = [T::zero(); N];
        ex[0] = x;
        if N == 4 {
            ex[1] = T::one();
        }
        a[0] = ex;
        if a.len() > 1 {
            let mut et = [T::zero(); N];
            et[0] = t;
            if N == 4 {
                et[2] = T::one();
            }
            a[1] = et;
        }
    }

    /// Returns the output channels, or the index of the first layer that
    /// produced a non-finite value.
    fn forward(&mut self, net: &MlpParams<T>) -> Result<[T; N], usize> {
        for (k, layer) in net.layers.iter().enumerate() {
            let act = net.activation_after(k);
            let (before, after) = self.acts.split_at_mut(k + 1);
            let a_in = &before[k];
            let a_out = &mut after[0];
            let z = &mut self.pre[k];
            let ds = &mut self.derivs[k];
            let mut finite = true;
            for j in 0..layer.fan_out {
                let mut acc = [T::zero(); N];
                for (w, ai) in layer.row(j).iter().zip(a_in.iter()) {
                    for c in 0..N {
                        acc[c] = acc[c] + *w * ai[c];
                    }
                }
                acc[0] = acc[0] + layer.bias[j];
                z[j] = acc;
                a_out[j] = match act {
                    None => acc,
                    Some(act) => {
                        let d = act.derivs(acc[0]);
                        ds[j] = d;
                        activate(d, &acc)
                    }
                };
                finite &= a_out[j].iter().all(|v| v.is_finite());
            }
            if !finite {
                return Err(k);
            }
        }
        Ok(self.acts[net.layers.len()][0])
    }

    /// Accumulates `∂/∂θ (seed · output)` into `grad`.
    fn backward(&mut self, net: &MlpParams<T>, seed: [T; N], grad: &mut ParamGrad<T>) {
        let nl = net.layers.len();
        self.adj[0] = seed;
        for k in (0..nl).rev() {
            let layer = &net.layers[k];
            let act = net.activation_after(k);
            // Turn the adjoint of the layer output into that of z.
            if act.is_some() {
                for j in 0..layer.fan_out {
                    self.adj[j] = activate_adjoint(&self.derivs[k][j], &self.pre[k][j], &self.adj[j]);
                }
            }
            let a_in = &self.acts[k];
            let gw = &mut grad.weights[k];
            let gb = &mut grad.bias[k];
            for j in 0..layer.fan_out {
                let zb = self.adj[j];
                gb[j] = gb[j] + zb[0];
                let row = &mut gw[j * layer.fan_in..(j + 1) * layer.fan_in];
                for (g, ai) in row.iter_mut().zip(a_in.iter()) {
                    let mut s = zb[0] * ai[0];
                    for c in 1..N {
                        s = s + zb[c] * ai[c];
                    }
                    *g = *g + s;
                }
            }
            if k > 0 {
                let prev = &mut self.adj_prev[..layer.fan_in];
                prev.iter_mut().for_each(|v| *v = [T::zero(); N]);
                for j in 0..layer.fan_out {
                    let zb = self.adj[j];
                    for (p, w) in prev.iter_mut().zip(layer.row(j)) {
                        for c in 0..N {
                            p[c] = p[c] + *w * zb[c];
                        }
                    }
                }
                std::mem::swap(&mut self.adj, &mut self.adj_prev);
            }
        }
    }
}

#[inline]
fn activate<T: Scalar, const N: usize>(d: Derivs<T>, z: &[T; N]) -> [T; N] {
    let mut a = [T::zero(); N];
    a[0] = d.f;
    if N == 4 {
        a[1] = d.d1 * z[1];
        a[2] = d.d1 * z[2];
        a[3] = d.d2 * z[1] * z[1] + d.d1 * z[3];
    }
    a
}

#[inline]
fn activate_adjoint<T: Scalar, const N: usize>(d: &Derivs<T>, z: &[T; N], ab: &[T; N]) -> [T; N] {
    let mut zb = [T::zero(); N];
    if N == 4 {
        let (zx, zt, zxx) = (z[1], z[2], z[3]);
        zb[0] = ab[0] * d.d1
            + ab[1] * d.d2 * zx
            + ab[2] * d.d2 * zt
            + ab[3] * (d.d3 * zx * zx + d.d2 * zxx);
        zb[1] = ab[1] * d.d1 + T::lit(2.0) * ab[3] * d.d2 * zx;
        zb[2] = ab[2] * d.d1;
        zb[3] = ab[3] * d.d1;
    } else {
        zb[0] = ab[0] * d.d1;
    }
    zb
}

fn check_arity<T: Scalar>(net: &MlpParams<T>) -> Result<(), AutodiffError> {
    net.validate()?;
    let d = net.input_dim();
    if !(d == 1 || d == 2) || net.output_dim() != 1 {
        return Err(AutodiffError::Arity(net.sizes()));
    }
    Ok(())
}

/// Output jet `(u, u_x, u_t, u_xx)` at `(x, t)`. A one-input network is
/// treated as a function of `x` alone, so its `u_t` is zero.
pub fn jet_eval<T: Scalar>(net: &MlpParams<T>, x: T, t: T) -> Result<Jet2<T>, AutodiffError> {
    check_arity(net)?;
    let mut tape = Tape::<T, 4>::new(net);
    tape.load_input(x, t);
    let out = tape
        .forward(net)
        .map_err(|layer| AutodiffError::NonFinite { layer, point: 0, group: 0 })?;
    Ok(Jet2::from_array(out))
}

/// Reusable jet evaluator for many points on one network.
pub struct JetEvaluator<'n, T: Scalar> {
    net: &'n MlpParams<T>,
    tape: Tape<T, 4>,
}

impl<'n, T: Scalar> JetEvaluator<'n, T> {
    pub fn new(net: &'n MlpParams<T>) -> Result<Self, AutodiffError> {
        check_arity(net)?;
        Ok(Self { net, tape: Tape::new(net) })
    }

    pub fn eval(&mut self, x: T, t: T) -> Result<Jet2<T>, AutodiffError> {
        self.tape.load_input(x, t);
        self.tape
            .forward(self.net)
            .map(Jet2::from_array)
            .map_err(|layer| AutodiffError::NonFinite { layer, point: 0, group: 0 })
    }
}

/// Gradient of the loss described by `spec` with respect to every
/// parameter of `net`. With `hook`, each point's gradient is passed through
/// it before being averaged.
pub fn loss_param_grad<T: Scalar>(
    net: &MlpParams<T>,
    spec: &LossSpec<'_, T>,
    hook: Option<SampleHook<'_, T>>,
) -> Result<LossEval<T>, AutodiffError> {
    check_arity(net)?;
    let mut grad = ParamGrad::zeros_like(net);
    let mut parts = Vec::with_capacity(spec.groups.len());
    for (gi, g) in spec.groups.iter().enumerate() {
        if g.points.is_empty() {
            parts.push(T::zero());
            continue;
        }
        let n = T::from_usize_lossy(g.points.len());
        // Seed scale so that the accumulated gradient is that of weight·scale·mean ℓ.
        let coef = g.weight * g.scale / n;
        let sum = if g.objective.needs_derivatives() {
            group_sum::<T, 4>(net, g, gi, coef, hook, &mut grad)?
        } else {
            group_sum::<T, 1>(net, g, gi, coef, hook, &mut grad)?
        };
        parts.push(g.scale * (sum / n));
    }
    let total = total_of(spec, &parts);
    Ok(LossEval { total, parts, grad })
}

/// Loss value only.
pub fn loss_value<T: Scalar>(net: &MlpParams<T>, spec: &LossSpec<'_, T>) -> Result<LossEval<T>, AutodiffError> {
    check_arity(net)?;
    let mut parts = Vec::with_capacity(spec.groups.len());
    for (gi, g) in spec.groups.iter().enumerate() {
        if g.points.is_empty() {
            parts.push(T::zero());
            continue;
        }
        let n = T::from_usize_lossy(g.points.len());
        let sum = if g.objective.needs_derivatives() {
            value_sum::<T, 4>(net, g, gi)?
        } else {
            value_sum::<T, 1>(net, g, gi)?
        };
        parts.push(g.scale * (sum / n));
    }
    let total = total_of(spec, &parts);
    Ok(LossEval { total, parts, grad: ParamGrad::zeros_like(net) })
}

fn total_of<T: Scalar>(spec: &LossSpec<'_, T>, parts: &[T]) -> T {
    spec.groups.iter().zip(parts).fold(T::zero(), |acc, (g, &p)| acc + g.weight * p)
}

fn output_jet<T: Scalar, const N: usize>(out: [T; N]) -> Jet2<T> {
    let mut a = [T::zero(); 4];
    a[..N].copy_from_slice(&out);
    Jet2::from_array(a)
}

fn seed_of<T: Scalar, const N: usize>(ub: Jet2<T>, k: T) -> [T; N] {
    let a = ub.to_array();
    let mut s = [T::zero(); N];
    for c in 0..N {
        s[c] = a[c] * k;
    }
    s
}

fn chunk_partial<T: Scalar, const N: usize>(
    net: &MlpParams<T>,
    g: &LossGroup<'_, T>,
    gi: usize,
    first: usize,
    pts: &[LossPoint<T>],
    coef: T,
    hook: Option<SampleHook<'_, T>>,
) -> Result<(T, ParamGrad<T>), AutodiffError> {
    let mut tape = Tape::<T, N>::new(net);
    let mut acc = ParamGrad::zeros_like(net);
    let mut single = hook.map(|_| ParamGrad::zeros_like(net));
    let mut sum = T::zero();
    for (i, p) in pts.iter().enumerate() {
        let point = first + i;
        tape.load_input(p.x, p.t);
        let out = tape
            .forward(net)
            .map_err(|layer| AutodiffError::NonFinite { layer, point, group: gi })?;
        let (l, ub) = g.objective.eval(p, output_jet(out));
        if !l.is_finite() || !ub.is_finite() {
            return Err(AutodiffError::NonFiniteLoss { point, group: gi });
        }
        sum = sum + l;
        match (&mut single, hook) {
            (Some(one), Some(h)) => {
                one.fill_zero();
                tape.backward(net, seed_of(ub, T::one()), one);
                h(one);
                acc.axpy(coef, one);
            }
            _ => tape.backward(net, seed_of(ub, coef), &mut acc),
        }
    }
    Ok((sum, acc))
}

fn group_sum<T: Scalar, const N: usize>(
    net: &MlpParams<T>,
    g: &LossGroup<'_, T>,
    gi: usize,
    coef: T,
    hook: Option<SampleHook<'_, T>>,
    grad: &mut ParamGrad<T>,
) -> Result<T, AutodiffError> {
    let chunks: Vec<(usize, &[LossPoint<T>])> =
        g.points.chunks(CHUNK).enumerate().map(|(c, pts)| (c * CHUNK, pts)).collect();
    let mut sum = T::zero();
    let mut group_grad = ParamGrad::zeros_like(net);
    for window in chunks.chunks(WINDOW) {
        let partials: Vec<_> = window
            .par_iter()
            .map(|&(first, pts)| chunk_partial::<T, N>(net, g, gi, first, pts, coef, hook))
            .collect();
        for p in partials {
            let (s, pg) = p?;
            sum = sum + s;
            group_grad.axpy(T::one(), &pg);
        }
    }
    grad.axpy(T::one(), &group_grad);
    Ok(sum)
}

fn value_sum<T: Scalar, const N: usize>(
    net: &MlpParams<T>,
    g: &LossGroup<'_, T>,
    gi: usize,
) -> Result<T, AutodiffError> {
    let partials: Vec<Result<T, AutodiffError>> = g
        .points
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, pts)| {
            let mut tape = Tape::<T, N>::new(net);
            let mut sum = T::zero();
            for (i, p) in pts.iter().enumerate() {
                let point = c * CHUNK + i;
                tape.load_input(p.x, p.t);
                let out = tape
                    .forward(net)
                    .map_err(|layer| AutodiffError::NonFinite { layer, point, group: gi })?;
                let (l, _) = g.objective.eval(p, output_jet(out));
                if !l.is_finite() {
                    return Err(AutodiffError::NonFiniteLoss { point, group: gi });
                }
                sum = sum + l;
            }
            Ok(sum)
        })
        .collect();
    partials.into_iter().try_fold(T::zero(), |acc, p| Ok(acc + p?))
}

/// Activations whose second derivative is not identically zero, i.e. for
/// which jet curvature terms are exercised.
pub fn is_smooth(act: Activation) -> bool {
    !matches!(act, Activation::Relu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::sigmoid;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Objective reading every channel: ℓ = (u + 0.3u_x − 0.7u_t + 0.2u_xx − target)².
    struct Mixed;
    impl PointObjective<f64> for Mixed {
        fn eval(&self, p: &LossPoint<f64>, u: Jet2<f64>) -> (f64, Jet2<f64>) {
            let r = u.val + 0.3 * u.dx - 0.7 * u.dt + 0.2 * u.dxx - p.target;
            (r * r, Jet2::new(2.0 * r, 0.6 * r, -1.4 * r, 0.4 * r))
        }
    }

    fn points(n: usize, seed: u64) -> Vec<LossPoint<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| LossPoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn fd_check(net: &MlpParams<f64>, spec: &LossSpec<'_, f64>) -> f64 {
        let g = loss_param_grad(net, spec, None).unwrap().grad.to_flat();
        let base = net.to_flat();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..base.len() {
            let mut p = net.clone();
            let mut v = base.clone();
            v[i] += h;
            p.set_flat(&v).unwrap();
            let lp = loss_value(&p, spec).unwrap().total;
            v[i] -= 2.0 * h;
            p.set_flat(&v).unwrap();
            let lm = loss_value(&p, spec).unwrap().total;
            let fd = (lp - lm) / (2.0 * h);
            let dev = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-8);
            worst = worst.max(dev);
        }
        worst
    }

    #[test]
    fn jet_of_constant_sigmoid_neuron() {
        let net = MlpParams::<f64>::zeros(&[2, 1], Activation::Sigmoid)
            .unwrap()
            .with_output_activation(Some(Activation::Sigmoid));
        let j = jet_eval(&net, 0.4, 0.9).unwrap();
        assert_eq!(j, Jet2::new(0.5, 0.0, 0.0, 0.0));
    }

    #[test]
    fn jet_of_linear_identity() {
        let mut net = MlpParams::<f64>::zeros(&[2, 1], Activation::Tanh).unwrap();
        net.layers[0].weights = vec![1.0, 0.0];
        let j = jet_eval(&net, 0.3, 0.7).unwrap();
        assert_eq!(j, Jet2::new(0.3, 1.0, 0.0, 0.0));
    }

    #[test]
    fn jet_of_scaled_sigmoid_matches_fd() {
        let mut net = MlpParams::<f64>::zeros(&[2, 1], Activation::Sigmoid)
            .unwrap()
            .with_output_activation(Some(Activation::Sigmoid));
        net.layers[0].weights = vec![2.0, 0.0];
        let j = jet_eval(&net, 0.5, 0.0).unwrap();
        let d = Activation::Sigmoid.derivs(1.0);
        assert_relative_eq!(j.dx, 2.0 * d.d1, max_relative = 1e-15);
        assert_relative_eq!(j.dxx, 4.0 * d.d2, max_relative = 1e-15);
        let f = |x: f64| sigmoid(2.0 * x);
        let h = 1e-4;
        assert_relative_eq!(j.dx, (f(0.5 + h) - f(0.5 - h)) / (2.0 * h), max_relative = 1e-6);
        assert_relative_eq!(j.dxx, (f(0.5 + h) - 2.0 * f(0.5) + f(0.5 - h)) / (h * h), max_relative = 1e-6);
    }

    #[test]
    fn jet_value_equals_plain_eval_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for act in Activation::ALL {
            let net = MlpParams::<f64>::init(&[2, 16, 16, 1], act, 5).unwrap();
            for _ in 0..1000 {
                let (x, t) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0));
                assert_eq!(jet_eval(&net, x, t).unwrap().val.to_bits(), net.eval(&[x, t]).unwrap().to_bits());
            }
        }
    }

    #[test]
    fn zero_net_at_target_has_zero_gradient() {
        let net = MlpParams::<f64>::zeros(&[2, 4, 1], Activation::Sigmoid)
            .unwrap()
            .with_output_activation(Some(Activation::Sigmoid));
        let pts: Vec<_> = points(20, 1).into_iter().map(|p| LossPoint { target: 0.5, ..p }).collect();
        let spec = LossSpec::new().group(&pts, &SquaredError, 1.0, 1.0);
        let ev = loss_param_grad(&net, &spec, None).unwrap();
        assert_eq!(ev.total, 0.0);
        assert!(ev.grad.is_zero());
    }

    #[test]
    fn single_neuron_step_fit_matches_fd() {
        let mut net = MlpParams::<f64>::zeros(&[1, 1], Activation::Sigmoid)
            .unwrap()
            .with_output_activation(Some(Activation::Sigmoid));
        net.layers[0].weights[0] = 1.0;
        let pts = [LossPoint::new(-0.5, 0.0, 0.0), LossPoint::new(0.5, 0.0, 1.0)];
        let spec = LossSpec::new().group(&pts, &SquaredError, 1.0, 1.0);
        let g = loss_param_grad(&net, &spec, None).unwrap().grad.weights[0][0];
        let mse = |w: f64| ((sigmoid(-0.5 * w)).powi(2) + (sigmoid(0.5 * w) - 1.0).powi(2)) / 2.0;
        let h = 1e-5;
        assert_relative_eq!(g, (mse(1.0 + h) - mse(1.0 - h)) / (2.0 * h), max_relative = 1e-5);
    }

    #[test]
    fn mixed_objective_gradients_match_fd() {
        for act in [Activation::Sigmoid, Activation::Tanh] {
            let mut net = MlpParams::<f64>::init(&[2, 5, 4, 1], act, 3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for l in &mut net.layers {
                l.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
            }
            let pts = points(150, 2);
            let spec = LossSpec::new().group(&pts, &Mixed, 2.0, 0.7);
            assert!(fd_check(&net, &spec) < 1e-5, "{act}");
        }
    }

    #[test]
    fn results_independent_of_thread_count() {
        let net = MlpParams::<f64>::init(&[2, 8, 8, 1], Activation::Tanh, 1).unwrap();
        let pts = points(1000, 4);
        let spec = LossSpec::new().group(&pts, &Mixed, 1.0, 1.0);
        let a = loss_param_grad(&net, &spec, None).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| loss_param_grad(&net, &spec, None).unwrap());
        assert_eq!(a.total.to_bits(), b.total.to_bits());
        assert_eq!(a.grad, b.grad);
    }

    #[test]
    fn identity_hook_changes_nothing_material() {
        let net = MlpParams::<f64>::init(&[2, 6, 1], Activation::Sigmoid, 8).unwrap();
        let pts = points(100, 6);
        let spec = LossSpec::new().group(&pts, &Mixed, 1.0, 1.0);
        let a = loss_param_grad(&net, &spec, None).unwrap().grad.to_flat();
        let b = loss_param_grad(&net, &spec, Some(&|_: &mut ParamGrad<f64>| {})).unwrap().grad.to_flat();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-14, max_relative = 1e-12);
        }
    }

    #[test]
    fn overflow_reports_layer() {
        let mut net = MlpParams::<f64>::init(&[2, 3, 1], Activation::Tanh, 0).unwrap();
        net.layers[1].weights[0] = f64::MAX;
        net.layers[1].weights[1] = f64::MAX;
        net.layers[1].weights[2] = f64::MAX;
        let pts = [LossPoint::new(0.9, 0.9, 0.0)];
        let spec = LossSpec::new().group(&pts, &SquaredError, 1.0, 1.0);
        match loss_param_grad(&net, &spec, None) {
            Err(AutodiffError::NonFinite { layer, .. }) => assert_eq!(layer, 1),
            Err(AutodiffError::NonFiniteLoss { .. }) => {}
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn arity_is_checked() {
        let net = MlpParams::<f64>::zeros(&[3, 2, 1], Activation::Tanh).unwrap();
        assert!(matches!(jet_eval(&net, 0.0, 0.0), Err(AutodiffError::Arity(_))));
    }
}
