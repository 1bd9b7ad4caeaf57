use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{check_batch, rows_of, TargetModel};
use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::oracles::LogDensity;
use crate::posteriors::standard_normal_log_density;
use crate::rng::Rng;

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Bayesian logistic regression without intercept: `w ~ N(0, I)`,
/// `y_i ~ Bernoulli(σ(wᵀx_i))`.
#[derive(Clone, Debug)]
pub struct Blr {
    x: Matrix,
    y: Vec<f64>,
}

impl Blr {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                found: y.len(),
            });
        }
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("logistic regression labels must be 0 or 1"));
        }
        Ok(Self { x, y })
    }

    /// `n` inputs uniform on `[−5, 5]^d`, labels drawn with a weight sampled
    /// from the prior. Returns the model and that weight.
    pub fn synthetic(n: usize, d: usize, rng: &mut Rng) -> (Self, Vec<f64>) {
        let w = rng.normals(d);
        let x: Vec<f64> = (0..n * d).map(|_| rng.uniform_in(-5.0, 5.0)).collect();
        let x = Matrix::from_vec(n, d, x).expect("sized");
        let y = x
            .row_iter()
            .map(|row| f64::from(u8::from(rng.uniform() < sigmoid(dot(row, &w)))))
            .collect();
        (Self { x, y }, w)
    }

    pub fn inputs(&self) -> &Matrix {
        &self.x
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    /// Full-data `log p(y | X, w) + log p(w)` and its gradient, in plain `f64`.
    pub fn log_posterior(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let mut value = -0.5 * dot(w, w) - 0.5 * w.len() as f64 * (2.0 * core::f64::consts::PI).ln();
        let mut grad: Vec<f64> = w.iter().map(|v| -v).collect();
        for (row, &y) in self.x.row_iter().zip(&self.y) {
            let s = dot(row, w);
            value += y * s - softplus(s);
            let r = y - sigmoid(s);
            for (g, x) in grad.iter_mut().zip(row) {
                *g += r * x;
            }
        }
        (value, grad)
    }
}

impl TargetModel for Blr {
    fn latent_dim(&self) -> usize {
        self.x.cols()
    }

    fn data_len(&self) -> usize {
        self.y.len()
    }

    fn sample_prior(&self, n: usize, rng: &mut Rng) -> Matrix {
        let d = self.latent_dim();
        Matrix::from_vec(n, d, rng.normals(n * d)).expect("sized")
    }

    fn log_prior(&self, z: &Tensor) -> Result<Tensor> {
        rows_of(z, self.latent_dim())?;
        standard_normal_log_density(z)
    }

    fn log_likelihood(&self, _tape: &Tape, z: &Tensor, batch: &[usize]) -> Result<Tensor> {
        let n = rows_of(z, self.latent_dim())?;
        check_batch(batch, self.y.len())?;
        if batch.is_empty() {
            return Ok(Tensor::zeros([n]));
        }
        let d = self.latent_dim();
        let mut xt = Vec::with_capacity(d * batch.len());
        for j in 0..d {
            xt.extend(batch.iter().map(|&i| self.x[(i, j)]));
        }
        let y: Vec<f64> = batch.iter().map(|&i| self.y[i]).collect();
        let s = z.matmul(&Tensor::new(xt, [d, batch.len()])?)?;
        let ll = s.mul(&Tensor::new(y, [batch.len()])?)?.sub(&s.softplus()?)?;
        ll.sum_axis(1)?.scale(self.y.len() as f64 / batch.len() as f64)
    }
}

impl LogDensity for Blr {
    fn dim(&self) -> usize {
        self.latent_dim()
    }

    fn log_density_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        self.log_posterior(x)
    }
}

impl Parameterized for Blr {
    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }
}
