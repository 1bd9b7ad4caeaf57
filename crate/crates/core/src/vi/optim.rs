use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::config::OptimizerConfig;
use super::elbo::{ElboEstimate, StepOutput};
use crate::autodiff::{Gradients, Param, ParamId, Parameterized};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Adaptive-moment descent on `−ELBO`.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    steps: i32,
    moments: BTreeMap<ParamId, (Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn steps(&self) -> usize {
        self.steps as usize
    }

    /// Applies one update to every parameter of `target` using `grads`.
    pub fn step<T: Parameterized + ?Sized>(&mut self, target: &mut T, grads: &Gradients) {
        self.steps += 1;
        let c1 = 1.0 - self.beta1.powi(self.steps);
        let c2 = 1.0 - self.beta2.powi(self.steps);
        for p in target.params_mut() {
            let g = grads.param(p);
            self.update(p, &g, c1, c2);
        }
    }

    fn update(&mut self, p: &mut Param, g: &[f64], c1: f64, c2: f64) {
        let (m, v) = self
            .moments
            .entry(p.id())
            .or_insert_with(|| (vec![0.0; g.len()], vec![0.0; g.len()]));
        for (i, x) in p.value_mut().iter_mut().enumerate() {
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
            *x -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
        }
    }
}

/// Two parameterized objects trained jointly, e.g. a decoder and an encoder.
pub struct Pair<'a, A: ?Sized, B: ?Sized>(pub &'a mut A, pub &'a mut B);

impl<A: Parameterized + ?Sized, B: Parameterized + ?Sized> Parameterized for Pair<'_, A, B> {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.0.params();
        v.extend(self.1.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.0.params_mut();
        v.extend(self.1.params_mut());
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub elbo: f64,
    pub kl: f64,
    pub reconstruction: f64,
}

impl TraceRow {
    pub fn new(iteration: usize, e: &ElboEstimate) -> Self {
        Self {
            iteration,
            elbo: e.elbo,
            kl: e.kl,
            reconstruction: e.reconstruction,
        }
    }
}

pub type Trace = Vec<TraceRow>;

/// An aborted run: the error and every row recorded before it.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingFailure {
    pub error: Error,
    pub trace: Trace,
}

/// Runs `iterations` steps of `step` followed by an Adam update.
///
/// `step` receives the current parameters, the 0-based iteration and the
/// run's random stream. The rate for iteration `i` is
/// `config.rate(i / iterations_per_epoch + 1)`. A non-finite ELBO or
/// gradient aborts the run with the rows recorded so far.
pub fn optimize<T, F>(
    target: &mut T,
    config: &OptimizerConfig,
    iterations: usize,
    iterations_per_epoch: usize,
    rng: &mut Rng,
    mut step: F,
) -> core::result::Result<Trace, TrainingFailure>
where
    T: Parameterized + ?Sized,
    F: FnMut(&T, usize, &mut Rng) -> Result<StepOutput>,
{
    let mut adam = Adam::new(config.lr);
    let mut trace = Vec::with_capacity(iterations);
    let per_epoch = iterations_per_epoch.max(1);
    for iteration in 0..iterations {
        let out = match step(target, iteration, rng) {
            Ok(out) => out,
            Err(Error::NonFiniteLoss { .. }) => {
                return Err(TrainingFailure {
                    error: Error::NonFiniteLoss { iteration },
                    trace,
                })
            }
            Err(error) => return Err(TrainingFailure { error, trace }),
        };
        let finite_grads = target
            .params()
            .iter()
            .all(|p| out.gradients.param(p).iter().all(|g| g.is_finite()));
        if !out.estimate.elbo.is_finite() || !finite_grads {
            return Err(TrainingFailure {
                error: Error::NonFiniteLoss { iteration },
                trace,
            });
        }
        trace.push(TraceRow::new(iteration, &out.estimate));
        adam.lr = config.rate(iteration / per_epoch + 1);
        adam.step(target, &out.gradients);
    }
    Ok(trace)
}
