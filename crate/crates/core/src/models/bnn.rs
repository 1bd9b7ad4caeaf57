use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::data::{RegressionData, Standardizer};
use super::gamma::{gamma_kl_tensor, GAMMA_PRIOR_RATE, GAMMA_PRIOR_SHAPE};
use super::{check_batch, rows_of, TargetModel};
use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::posteriors::standard_normal_log_density;
use crate::rng::Rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Regression network `ŷ = f(x, W)` with ReLU hidden layers, `W ~ N(0, I)`
/// (bias rows included), `y ~ N(ŷ, 1/λ)` and a variational
/// `q(λ) = Gamma(a, b)` against a `Gamma(6, 6)` prior.
///
/// `z` packs the layer matrices row-major, each of shape `(in + 1) × out`
/// with the bias as the last row.
#[derive(Clone, Debug)]
pub struct BnnRegression {
    data: RegressionData,
    widths: Vec<usize>,
    log_a: Param,
    log_b: Param,
}

impl BnnRegression {
    /// `data` should already be standardized.
    pub fn new(data: RegressionData, hidden: &[usize]) -> Result<Self> {
        if hidden.contains(&0) {
            return Err(Error::invalid("hidden layers must be non-empty"));
        }
        let mut widths = vec![data.x.cols()];
        widths.extend_from_slice(hidden);
        widths.push(1);
        Ok(Self {
            data,
            widths,
            log_a: Param::filled("precision.log_a", [1], GAMMA_PRIOR_SHAPE.ln()),
            log_b: Param::filled("precision.log_b", [1], GAMMA_PRIOR_RATE.ln()),
        })
    }

    pub fn data(&self) -> &RegressionData {
        &self.data
    }

    /// `(in + 1, out)` for every weight matrix.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        self.widths.windows(2).map(|w| (w[0] + 1, w[1])).collect()
    }

    /// Number of entries of each weight matrix, in packing order.
    pub fn blocks(&self) -> Vec<usize> {
        self.layer_shapes().iter().map(|(r, c)| r * c).collect()
    }

    /// Shape and rate of `q(λ)`.
    pub fn precision(&self) -> (f64, f64) {
        (self.log_a.value()[0].exp(), self.log_b.value()[0].exp())
    }

    pub fn set_precision(&mut self, a: f64, b: f64) -> Result<()> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::domain("set_precision", "shape and rate must be positive"));
        }
        self.log_a.set_value(&[a.ln()])?;
        self.log_b.set_value(&[b.ln()])
    }

    /// Network outputs `[n, rows]` for weight draws `z` (`[n, P]`) at inputs `x`.
    pub fn forward(&self, z: &Tensor, x: &Matrix) -> Result<Tensor> {
        let n = rows_of(z, self.latent_dim())?;
        if x.cols() != self.widths[0] {
            return Err(Error::DimensionMismatch {
                expected: self.widths[0],
                found: x.cols(),
            });
        }
        let rows = x.rows();
        let mut aug = Vec::with_capacity(rows * (x.cols() + 1));
        for r in x.row_iter() {
            aug.extend_from_slice(r);
            aug.push(1.0);
        }
        let mut h = Tensor::new(aug, [rows, x.cols() + 1])?;
        let ones = Tensor::ones([n, rows, 1]);
        let shapes = self.layer_shapes();
        let mut offset = 0;
        for (l, &(fan_in, out)) in shapes.iter().enumerate() {
            let w = z.narrow(1, offset, fan_in * out)?.reshape([n, fan_in, out])?;
            offset += fan_in * out;
            h = h.matmul(&w)?;
            if l + 1 < shapes.len() {
                h = Tensor::concat(&[&h.relu()?, &ones], 2)?;
            }
        }
        h.reshape([n, rows])
    }
}

impl TargetModel for BnnRegression {
    fn latent_dim(&self) -> usize {
        self.blocks().iter().sum()
    }

    fn data_len(&self) -> usize {
        self.data.len()
    }

    fn sample_prior(&self, n: usize, rng: &mut Rng) -> Matrix {
        let d = self.latent_dim();
        Matrix::from_vec(n, d, rng.normals(n * d)).expect("sized")
    }

    fn log_prior(&self, z: &Tensor) -> Result<Tensor> {
        rows_of(z, self.latent_dim())?;
        standard_normal_log_density(z)
    }

    /// Expected log-likelihood under `q(λ)`:
    /// `½ Σ_i [ψ(a) − log b − (a/b)(y_i − ŷ_i)² − log 2π]`, scaled by `N / B`.
    fn log_likelihood(&self, tape: &Tape, z: &Tensor, batch: &[usize]) -> Result<Tensor> {
        let n = rows_of(z, self.latent_dim())?;
        check_batch(batch, self.data.len())?;
        if batch.is_empty() {
            return Ok(Tensor::zeros([n]));
        }
        let sub = self.data.subset(batch);
        let pred = self.forward(z, &sub.x)?;
        let sq = pred.sub(&Tensor::new(sub.y, [batch.len()])?)?.square()?.sum_axis(1)?;
        let log_a = tape.param(&self.log_a);
        let log_b = tape.param(&self.log_b);
        let a = log_a.exp()?;
        let precision = a.div(&log_b.exp()?)?;
        let constant = a.digamma()?.sub(&log_b)?.add_scalar(-LN_2PI)?.scale(0.5 * batch.len() as f64)?;
        let ll = sq.mul(&precision)?.scale(-0.5)?.add(&constant)?;
        ll.scale(self.data.len() as f64 / batch.len() as f64)
    }

    fn extra_kl(&self, tape: &Tape) -> Result<Option<Tensor>> {
        let kl = gamma_kl_tensor(&tape.param(&self.log_a), &tape.param(&self.log_b))?;
        Ok(Some(kl.reshape(Vec::<usize>::new())?))
    }
}

impl Parameterized for BnnRegression {
    fn params(&self) -> Vec<&Param> {
        vec![&self.log_a, &self.log_b]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.log_a, &mut self.log_b]
    }
}

/// `log (1/n) Σ exp(v_i)`.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + (values.iter().map(|v| (v - m).exp()).sum::<f64>() / values.len() as f64).ln()
}

/// Monte Carlo predictive summary in the original target units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean: Vec<f64>,
    /// Spread of the network outputs plus the noise variance `1/E[λ]`.
    pub variance: Vec<f64>,
    pub rmse: f64,
    /// Average over test points of `log (1/S) Σ_s N(y | ŷ_s, 1/λ_s)`.
    pub test_ll: f64,
}

/// Predictive mixture over the weight draws `samples` (`[S, P]`) and
/// `λ_s ~ q(λ)`, evaluated on raw (unstandardized) `test` data.
pub fn predict(
    model: &BnnRegression,
    samples: &Matrix,
    test: &RegressionData,
    scaler: &Standardizer,
    rng: &mut Rng,
) -> Result<Prediction> {
    let s = samples.rows();
    if s == 0 || test.is_empty() {
        return Err(Error::EmptySamples);
    }
    let scaled = scaler.apply(test);
    let pred = model.forward(&Tensor::from_matrix(samples), &scaled.x)?;
    let (a, b) = model.precision();
    let gamma = Gamma::new(a, 1.0 / b).map_err(|_| Error::domain("predict", "invalid precision posterior"))?;
    let lambdas: Vec<f64> = (0..s).map(|_| gamma.sample(rng)).collect();
    let sd2 = scaler.y_std * scaler.y_std;

    let t = test.len();
    let out = pred.values();
    let mut mean = vec![0.0; t];
    let mut variance = vec![0.0; t];
    let mut sq_err = 0.0;
    let mut ll = 0.0;
    let mut per_sample = vec![0.0; s];
    for i in 0..t {
        let y_hat: Vec<f64> = (0..s).map(|k| scaler.unscale_y(out[k * t + i])).collect();
        let m = y_hat.iter().sum::<f64>() / s as f64;
        let spread = y_hat.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / s as f64;
        mean[i] = m;
        variance[i] = spread + sd2 * b / a;
        sq_err += (test.y[i] - m) * (test.y[i] - m);
        for k in 0..s {
            let var = sd2 / lambdas[k];
            let r = test.y[i] - y_hat[k];
            per_sample[k] = -0.5 * (LN_2PI + var.ln()) - 0.5 * r * r / var;
        }
        ll += log_mean_exp(&per_sample);
    }
    Ok(Prediction {
        mean,
        variance,
        rmse: (sq_err / t as f64).sqrt(),
        test_ll: ll / t as f64,
    })
}
