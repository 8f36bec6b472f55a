//! Physics-informed neural network laboratory: second-order jets, small
//! fully connected networks, one-dimensional Cauchy problems with reference
//! solvers, and a training loop with simulated finite precision.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

// `!(a < b)` is used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod activation;
pub mod autodiff;
pub mod checkpoint;
pub mod constructions;
pub mod field;
pub mod jet;
pub mod mlp;
pub mod problems;
pub mod quadrature;
pub mod scalar;
pub mod solvers;
pub mod training;

pub use activation::Activation;
pub use autodiff::{jet_eval, loss_param_grad, AutodiffError, LossPoint, LossSpec, ParamGrad, PointObjective};
pub use field::{l2_field_error, FieldMeta, Grid1, SolutionField};
pub use jet::Jet2;
pub use mlp::{Layer, MlpError, MlpParams};
pub use problems::{CauchyProblem, CollocationSet, DomainBox, InitialCondition, PdeOperator, ProblemKind, Sampler};
pub use scalar::Scalar;

pub type Jet = Jet2<f64>;
pub type Mlp = MlpParams<f64>;
pub type Grad = ParamGrad<f64>;
pub type Field = SolutionField<f64>;
pub type Problem = CauchyProblem<f64>;
