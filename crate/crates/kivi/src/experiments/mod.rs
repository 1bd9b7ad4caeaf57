//! Experiment runners. Each returns its metrics; [`run`] wraps them with
//! output handling and the report.

mod amortized;
mod bench;
mod blr;
mod bnn;
mod gmm;

use std::collections::BTreeMap;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use kivi_core::autodiff::Tape;
use kivi_core::linalg::Matrix;
use kivi_core::posteriors::ImplicitPosterior;
use kivi_core::rng::Rng;
use kivi_core::vi::Trace;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::output::{write_json, Outputs};
use crate::report::{Metrics, RunReport, Timing};

pub use bench::{tracking_grid, TrackingCell, GRID_MEANS, GRID_STDS};
pub use blr::model_from_table as blr_model_from_table;
pub use bnn::load_dataset;
pub use gmm::plot_range as mixture_plot_range;

/// Random stream indices. Every stream derives from the config seed alone,
/// so adding a baseline never changes the draws of the main run.
pub(crate) mod streams {
    pub const DATA: u64 = 0;
    pub const INIT: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const FINAL: u64 = 3;
    pub const MEAN_FIELD: u64 = 4;
    pub const FLOW: u64 = 5;
    pub const EXTRA: u64 = 6;
    /// Mixed into the seed for the HMC chains, which take one stream each.
    pub const HMC_SALT: u64 = 0x4d43_4d43_4d43;
}

pub(crate) fn stream(config: &ExperimentConfig, index: u64) -> Rng {
    Rng::stream(config.seed, index)
}

pub(crate) fn draw<P: ImplicitPosterior + ?Sized>(q: &P, n: usize, rng: &mut Rng) -> Result<Matrix> {
    let tape = Tape::new();
    Ok(q.sample(&tape, n, rng)?.z.detach().to_matrix()?)
}

/// Mean of the last `k` ELBO values, a less noisy summary than the last one.
pub(crate) fn final_elbo(trace: &Trace, k: usize) -> f64 {
    let tail = &trace[trace.len().saturating_sub(k)..];
    tail.iter().map(|r| r.elbo).sum::<f64>() / tail.len().max(1) as f64
}

pub(crate) fn put(metrics: &mut Metrics, key: impl Into<String>, value: f64) {
    metrics.insert(key.into(), value);
}

/// Runs the configured experiment and writes `metrics.json` and
/// `report.json` next to its other outputs.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let started = Instant::now();
    let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let mut out = Outputs::create(&config.resolved_output_dir())?;
    out.json("config", "config.json", config)?;
    let metrics = match &config.experiment {
        Experiment::Gmm1d(e) => gmm::run(config, e, &mut out)?,
        Experiment::Blr2d(e) => blr::run(config, e, &mut out)?,
        Experiment::BnnRegression(e) => bnn::run(config, e, &mut out)?,
        Experiment::AmortizedAc(e) => amortized::run(config, e, &mut out)?,
        Experiment::EstimatorBench(e) => bench::run(config, e, &mut out)?,
    };
    out.json("metrics", "metrics.json", &metrics)?;
    let timing = Timing {
        started_unix_ms,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    let files: BTreeMap<String, String> = out.files().clone();
    let report = RunReport::new(config, metrics, files, timing);
    write_json(&out.path("report.json"), &report)?;
    Ok(report)
}

/// Shuffled minibatches, reshuffled with the training stream at the start
/// of every epoch. Without a batch size every step sees the whole dataset.
pub(crate) struct Batches {
    order: Vec<usize>,
    size: usize,
}

impl Batches {
    pub fn new(n: usize, size: Option<usize>) -> Self {
        Self {
            order: (0..n).collect(),
            size: size.unwrap_or(n).clamp(1, n.max(1)),
        }
    }

    pub fn per_epoch(&self) -> usize {
        self.order.len().div_ceil(self.size).max(1)
    }

    pub fn get(&mut self, iteration: usize, rng: &mut Rng) -> Vec<usize> {
        let k = iteration % self.per_epoch();
        if self.size == self.order.len() {
            return self.order.clone();
        }
        if k == 0 {
            rng.shuffle(&mut self.order);
        }
        let end = ((k + 1) * self.size).min(self.order.len());
        self.order[k * self.size..end].to_vec()
    }
}
