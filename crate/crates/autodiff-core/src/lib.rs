//! Minimal dense-MLP numeric kernel: tensors, reverse-mode gradients via a
//! per-layer tape, MSE loss, plain SGD, prior log-density gradients, and the
//! squared-exponential kernel used by particle update rules.

mod error;
mod kernel;
mod mlp;
mod optim;
mod prior;
mod tensor;

pub use error::{Error, Result};
pub use kernel::{sq_exp_kernel, sq_exp_kernel_grad_arg1};
pub use mlp::{forward, mse_loss, mse_loss_tape, Activation, LossTape, MlpArch, ParamSet, Tape};
pub use optim::{sgd_step, Sgd};
pub use prior::{prior_logdensity_grad, PriorSpec};
pub use tensor::Tensor;
