use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{log_sum_exp, rows_of, TargetModel};
use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::oracles::normal_density;
use crate::rng::Rng;

/// One-dimensional Gaussian mixture used directly as the target: it plays
/// the prior and there is no data, so the ELBO reduces to `−KL(q ‖ mixture)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(means: Vec<f64>, stds: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let g = Self { means, stds, weights };
        g.validate()?;
        Ok(g)
    }

    /// Equal-weight unit-variance components at −3 and 3.
    pub fn symmetric() -> Self {
        Self {
            means: vec![-3.0, 3.0],
            stds: vec![1.0, 1.0],
            weights: vec![0.5, 0.5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.means.len();
        if k == 0 || self.stds.len() != k || self.weights.len() != k {
            return Err(Error::invalid("mixture needs matching, non-empty means, stds and weights"));
        }
        if self.stds.iter().any(|s| !(*s > 0.0)) || self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("mixture stds and weights must be positive"));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("mixture weights must sum to 1"));
        }
        Ok(())
    }

    pub fn density(&self, z: f64) -> f64 {
        (0..self.means.len())
            .map(|k| self.weights[k] * normal_density(z, self.means[k], self.stds[k]))
            .sum()
    }
}

impl TargetModel for GaussianMixture {
    fn latent_dim(&self) -> usize {
        1
    }

    fn data_len(&self) -> usize {
        0
    }

    fn sample_prior(&self, n: usize, rng: &mut Rng) -> Matrix {
        let data = (0..n)
            .map(|_| {
                let u = rng.uniform();
                let mut acc = 0.0;
                let mut k = self.means.len() - 1;
                for (i, w) in self.weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        k = i;
                        break;
                    }
                }
                self.means[k] + self.stds[k] * rng.normal()
            })
            .collect();
        Matrix::from_vec(n, 1, data).expect("sized")
    }

    fn log_prior(&self, z: &Tensor) -> Result<Tensor> {
        let n = rows_of(z, 1)?;
        let z = z.reshape([n])?;
        let terms = (0..self.means.len())
            .map(|k| {
                let s = self.stds[k];
                let c = self.weights[k].ln() - s.ln() - 0.5 * (2.0 * core::f64::consts::PI).ln();
                z.add_scalar(-self.means[k])?.square()?.scale(-0.5 / (s * s))?.add_scalar(c)
            })
            .collect::<Result<Vec<_>>>()?;
        log_sum_exp(&terms)
    }

    fn log_likelihood(&self, _tape: &Tape, z: &Tensor, _batch: &[usize]) -> Result<Tensor> {
        Ok(Tensor::zeros([rows_of(z, 1)?]))
    }
}

impl Parameterized for GaussianMixture {
    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }
}
