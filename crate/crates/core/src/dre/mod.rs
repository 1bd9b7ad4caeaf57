//! Closed-form kernel density-ratio estimation.
//!
//! [`fit_ratio`] estimates `numerator / denominator` from samples of both
//! densities as a combination of RBF kernels centred on every sample.

mod kernel;
mod ratio;

pub use kernel::{median_bandwidth, rbf_gram, squared_distances};
pub use ratio::{
    empirical_objective, fit_ratio, objective_gradient, KernelConfig, ObjectiveGradient,
    RatioModel, DEFAULT_CLIP,
};
