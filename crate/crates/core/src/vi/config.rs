#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dre::KernelConfig;
use crate::error::{Error, Result};

fn default_true() -> bool {
    true
}

fn default_lr() -> f64 {
    0.001
}

fn default_one() -> usize {
    1
}

/// Learning-rate multiplier as a function of the (1-based) epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Schedule {
    #[default]
    Constant,
    /// `factor^⌊(epoch − 1) / every⌋`
    StepDecay { every: usize, factor: f64 },
    /// `horizon / (horizon + epoch − 1)`
    InverseAnneal { horizon: f64 },
}

impl Schedule {
    pub fn factor(&self, epoch: usize) -> f64 {
        let e = epoch.max(1) - 1;
        match *self {
            Schedule::Constant => 1.0,
            Schedule::StepDecay { every, factor } => factor.powi((e / every.max(1)) as i32),
            Schedule::InverseAnneal { horizon } => horizon / (horizon + e as f64),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub schedule: Schedule,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            lr: default_lr(),
            schedule: Schedule::Constant,
        }
    }
}

impl OptimizerConfig {
    pub fn rate(&self, epoch: usize) -> f64 {
        self.lr * self.schedule.factor(epoch)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KiviConfig {
    /// Prior draws per ratio fit.
    pub n_p: usize,
    /// Posterior draws per ratio fit.
    pub n_q: usize,
    /// Posterior draws for the reconstruction term.
    pub m: usize,
    pub kernel: KernelConfig,
    /// Fit `prior / posterior` (the default) rather than `posterior / prior`.
    #[serde(default = "default_true")]
    pub reverse_trick: bool,
    /// Evaluate the fitted ratio at a second, independent posterior batch
    /// instead of at the fitting draws.
    #[serde(default)]
    pub independent_eval: bool,
    /// Sum one ratio fit per posterior block instead of one joint fit.
    #[serde(default)]
    pub per_block_kl: bool,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_one")]
    pub iterations: usize,
    /// `None` uses the whole dataset every step.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl KiviConfig {
    pub fn new(n_p: usize, n_q: usize, m: usize, lambda: f64) -> Self {
        Self {
            n_p,
            n_q,
            m,
            kernel: KernelConfig::new(lambda),
            reverse_trick: true,
            independent_eval: false,
            per_block_kl: false,
            optimizer: OptimizerConfig::default(),
            iterations: 1,
            batch_size: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_p == 0 || self.n_q == 0 || self.m == 0 {
            return Err(Error::invalid("n_p, n_q and m must be at least 1"));
        }
        if !(self.optimizer.lr > 0.0 && self.optimizer.lr.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if let Schedule::StepDecay { every: 0, .. } = self.optimizer.schedule {
            return Err(Error::invalid("step decay period must be at least 1"));
        }
        self.kernel.validate()
    }
}
