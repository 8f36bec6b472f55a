//! Loss assembly, optimizers, simulated precision and the training loop.

pub mod loss;
pub mod optim;
pub mod precision;
pub mod train;

pub use loss::{data_loss, pinn_loss, pinn_loss_grad, pinn_loss_of, LossWeights, PinnLoss, SquaredResidual};
pub use optim::{step_adam, step_sgd, AdamState, OptimError, OptimizerKind};
pub use precision::flush_gradient;
pub use train::{train, train_with, AdamHyper, BatchSpec, LogRow, StopReason, TrainConfig, TrainError, TrainLog, TrainOutcome, TrainTarget};
