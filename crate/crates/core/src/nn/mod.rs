//! Dense neural network core: forward/backward passes, losses, optimizers,
//! and checkpoints.

pub mod checkpoint;
pub mod loss;
pub mod mlp;
pub mod optim;

pub use checkpoint::MlpCheckpoint;
pub use loss::{huber_loss_and_grad, mse_loss_and_grad, LossKind};
pub use mlp::{copy_weights, ForwardTrace, GradientSet, Mlp};
pub use optim::{Optimizer, OptimizerKind};
