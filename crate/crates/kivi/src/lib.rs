//! Experiment harness for kernel implicit variational inference: JSON
//! configs, experiment runners, reports, comparisons and plot data.

pub mod cli;
pub mod compare;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plotdata;
pub mod report;
pub mod stats;
pub mod train;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use experiments::run;
pub use report::RunReport;
