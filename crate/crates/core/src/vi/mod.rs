//! Training loop for kernel implicit variational inference.
//!
//! Each step draws fresh posterior and prior samples, fits the kernel ratio
//! between them and differentiates `reconstruction − KL` through the
//! reparameterized posterior draws. The fitted ratio is treated as a
//! constant: kernel centres are detached copies of the draws, and only the
//! evaluation points carry gradients.

mod config;
mod contrast;
mod elbo;
mod kl;
mod optim;

pub use config::{KiviConfig, OptimizerConfig, Schedule};
pub use contrast::{adaptive_contrast_step, amortized_elbo_step, moment_match, STD_FLOOR};
pub use elbo::{elbo_step, tractable_elbo_step, ElboEstimate, StepOutput};
pub use kl::{estimate_kl, kl_from_samples, kl_with_ratio, KlEstimate};
pub use optim::{optimize, Adam, Pair, Trace, TraceRow, TrainingFailure};
