//! The PINN objective: squared residual over the space-time box plus
//! squared initial misfit, each as a quadrature estimate of an `L²` norm.

use serde::{Deserialize, Serialize};

use crate::autodiff::{loss_param_grad, loss_value, AutodiffError, LossEval, LossPoint, LossSpec, PointObjective, SampleHook, SquaredError};
use crate::jet::Jet2;
use crate::mlp::MlpParams;
use crate::problems::{CauchyProblem, CollocationSet, PdeOperator};
use crate::scalar::Scalar;

/// `λ_res`, `λ_ic`, `λ_data`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub res: f64,
    pub ic: f64,
    pub data: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { res: 1.0, ic: 1.0, data: 1.0 }
    }
}

impl LossWeights {
    pub fn is_valid(&self) -> bool {
        let w = [self.res, self.ic, self.data];
        w.iter().all(|v| v.is_finite() && *v >= 0.0) && w.iter().any(|v| *v > 0.0)
    }
}

/// `r²` for the residual `r` of a PDE operator.
pub struct SquaredResidual<T> {
    pub op: PdeOperator<T>,
}

impl<T: Scalar> PointObjective<T> for SquaredResidual<T> {
    fn eval(&self, _p: &LossPoint<T>, u: Jet2<T>) -> (T, Jet2<T>) {
        let r = self.op.residual(&u);
        let dr = self.op.residual_partials(&u);
        (r * r, dr.scale(T::lit(2.0) * r))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PinnLoss<T> {
    pub total: T,
    pub residual: T,
    pub ic: T,
}

pub(crate) fn interior_points<T: Scalar>(colloc: &CollocationSet<T>) -> Vec<LossPoint<T>> {
    colloc.interior.iter().map(|&(x, t)| LossPoint::new(x, t, T::zero())).collect()
}

pub(crate) fn initial_points<T: Scalar>(problem: &CauchyProblem<T>, colloc: &CollocationSet<T>) -> Vec<LossPoint<T>> {
    colloc.initial.iter().map(|&x| LossPoint::new(x, T::zero(), problem.initial.eval(x))).collect()
}

fn assemble<T: Scalar>(parts: &[T], w: &LossWeights) -> PinnLoss<T> {
    let (res, ic) = (parts[0], parts[1]);
    PinnLoss { total: T::lit(w.res) * res + T::lit(w.ic) * ic, residual: res, ic }
}

/// `residual = |D|·mean r²` over interior points, `ic = |D_x|·mean (u − φ)²`
/// over initial points, `total = λ_res·residual + λ_ic·ic`.
pub fn pinn_loss<T: Scalar>(
    net: &MlpParams<T>,
    problem: &CauchyProblem<T>,
    colloc: &CollocationSet<T>,
    weights: &LossWeights,
) -> Result<PinnLoss<T>, AutodiffError> {
    let interior = interior_points(colloc);
    let initial = initial_points(problem, colloc);
    let res = SquaredResidual { op: problem.operator };
    let spec = LossSpec::new()
        .group(&interior, &res, problem.domain.volume(), T::lit(weights.res))
        .group(&initial, &SquaredError, problem.domain.width(), T::lit(weights.ic));
    let ev = loss_value(net, &spec)?;
    Ok(assemble(&ev.parts, weights))
}

/// Same quantity with the gradient.
pub fn pinn_loss_grad<T: Scalar>(
    net: &MlpParams<T>,
    problem: &CauchyProblem<T>,
    colloc: &CollocationSet<T>,
    weights: &LossWeights,
    hook: Option<SampleHook<'_, T>>,
) -> Result<(PinnLoss<T>, LossEval<T>), AutodiffError> {
    let interior = interior_points(colloc);
    let initial = initial_points(problem, colloc);
    let res = SquaredResidual { op: problem.operator };
    let spec = LossSpec::new()
        .group(&interior, &res, problem.domain.volume(), T::lit(weights.res))
        .group(&initial, &SquaredError, problem.domain.width(), T::lit(weights.ic));
    let ev = loss_param_grad(net, &spec, hook)?;
    Ok((assemble(&ev.parts, weights), ev))
}

/// PINN loss of any candidate given through its jet, e.g. an exact or
/// a.e. solution. Points where `u` returns `None` are skipped (used to
/// leave out kinks).
pub fn pinn_loss_of<T: Scalar>(
    u: impl Fn(T, T) -> Option<Jet2<T>>,
    problem: &CauchyProblem<T>,
    colloc: &CollocationSet<T>,
    weights: &LossWeights,
) -> PinnLoss<T> {
    let mean = |v: Vec<T>| {
        if v.is_empty() {
            T::zero()
        } else {
            let n = T::from_usize_lossy(v.len());
            v.into_iter().sum::<T>() / n
        }
    };
    let res: Vec<T> = colloc
        .interior
        .iter()
        .filter_map(|&(x, t)| u(x, t).map(|j| problem.residual(&j).powi(2)))
        .collect();
    let ic: Vec<T> = colloc
        .initial
        .iter()
        .filter_map(|&x| u(x, T::zero()).map(|j| (j.val - problem.initial.eval(x)).powi(2)))
        .collect();
    let parts = [problem.domain.volume() * mean(res), problem.domain.width() * mean(ic)];
    assemble(&parts, weights)
}

/// `(1/K) Σ (u(x_i, t_i) − u_i)²`. One-input networks ignore `t`.
pub fn data_loss<T: Scalar>(net: &MlpParams<T>, samples: &[LossPoint<T>]) -> Result<T, AutodiffError> {
    let spec = LossSpec::new().group(samples, &SquaredError, T::one(), T::one());
    Ok(loss_value(net, &spec)?.total)
}
