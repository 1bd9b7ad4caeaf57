//! Independent reference computations used to verify the estimators.

pub mod finite_diff;
pub mod hmc;
pub mod quadrature;
pub mod series;
pub mod ulsif;

pub use hmc::{hmc_sample, HmcConfig, HmcOutput, LogDensity};
pub use quadrature::{analytic_gaussian_kl, normal_density, quadrature_kl_1d, Grid};
pub use series::digamma_series;
pub use ulsif::brute_force_ulsif;
