use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{ImplicitPosterior, Sample};
use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::{Error, Result};
use crate::rng::Rng;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Row-wise `log N(z; 0, I)` for `z` of shape `[n, d]`.
pub fn standard_normal_log_density(z: &Tensor) -> Result<Tensor> {
    let d = z.shape().get(1).copied().unwrap_or(1) as f64;
    z.square()?.sum_axis(1)?.scale(-0.5)?.add_scalar(-d * HALF_LN_2PI)
}

/// Fully factorized Gaussian `N(μ, diag exp(2ρ))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeanFieldGaussian {
    pub mean: Param,
    pub log_std: Param,
}

impl MeanFieldGaussian {
    /// Standard normal in `d` dimensions.
    pub fn new(d: usize) -> Self {
        Self {
            mean: Param::zeros("mean", [d]),
            log_std: Param::zeros("log_std", [d]),
        }
    }

    pub fn with_values(mean: &[f64], log_std: &[f64]) -> Result<Self> {
        if mean.len() != log_std.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: log_std.len(),
            });
        }
        Ok(Self {
            mean: Param::new("mean", [mean.len()], mean.to_vec())?,
            log_std: Param::new("log_std", [mean.len()], log_std.to_vec())?,
        })
    }

    pub fn std(&self) -> Vec<f64> {
        self.log_std.value().iter().map(|v| v.exp()).collect()
    }

    /// `z = μ + σ ε` and `log q(z)` for the given standard-normal draws `eps` (`[n, d]`).
    pub fn transform(&self, tape: &Tape, eps: &Tensor) -> Result<Sample> {
        let eps = eps.detach();
        let log_std = tape.param(&self.log_std);
        let z = eps.mul(&log_std.exp()?)?.add(&tape.param(&self.mean))?;
        let log_density = standard_normal_log_density(&eps)?.sub(&log_std.sum()?)?;
        Ok(Sample {
            z,
            log_density: Some(log_density),
        })
    }

    /// `log q(z)` at arbitrary points `z` (`[n, d]`).
    pub fn log_density(&self, tape: &Tape, z: &Tensor) -> Result<Tensor> {
        let log_std = tape.param(&self.log_std);
        let u = z.sub(&tape.param(&self.mean))?.div(&log_std.exp()?)?;
        standard_normal_log_density(&u)?.sub(&log_std.sum()?)
    }
}

impl ImplicitPosterior for MeanFieldGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn sample(&self, tape: &Tape, n: usize, rng: &mut Rng) -> Result<Sample> {
        self.transform(tape, &Tensor::randn([n, self.dim()], rng))
    }
}

impl Parameterized for MeanFieldGaussian {
    fn params(&self) -> Vec<&Param> {
        vec![&self.mean, &self.log_std]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.mean, &mut self.log_std]
    }
}
