//! Target models: priors that can be sampled and likelihoods that can be
//! differentiated with respect to latent draws.

mod blr;
mod bnn;
mod data;
mod decoder;
mod gamma;
mod gmm;
mod standard;

use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Parameterized, Tape, Tensor};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;

pub use blr::Blr;
pub use bnn::{log_mean_exp, predict, BnnRegression, Prediction};
pub use data::{RegressionData, Standardizer};
pub use decoder::{Decoder, Observation};
pub use gamma::{gamma_kl, gamma_kl_tensor, GAMMA_PRIOR_RATE, GAMMA_PRIOR_SHAPE};
pub use gmm::GaussianMixture;
pub use standard::StandardNormal;

/// A model with global latent `z`: prior `p(z)` and likelihood `p(x | z)`
/// over a dataset of [`data_len`](TargetModel::data_len) points.
pub trait TargetModel: Parameterized {
    fn latent_dim(&self) -> usize;

    /// Size of the full dataset; minibatch likelihoods are scaled to it.
    fn data_len(&self) -> usize;

    /// `n` prior draws as rows.
    fn sample_prior(&self, n: usize, rng: &mut Rng) -> Matrix;

    /// `log p(z)` for every row of `z`.
    fn log_prior(&self, z: &Tensor) -> Result<Tensor>;

    /// `(N / |batch|) Σ_{i ∈ batch} log p(x_i | z)` for every row of `z`.
    /// An empty batch yields zeros.
    fn log_likelihood(&self, tape: &Tape, z: &Tensor, batch: &[usize]) -> Result<Tensor>;

    /// Closed-form KL terms of variational factors owned by the model.
    fn extra_kl(&self, _tape: &Tape) -> Result<Option<Tensor>> {
        Ok(None)
    }

    fn log_joint(&self, tape: &Tape, z: &Tensor, batch: &[usize]) -> Result<Tensor> {
        self.log_likelihood(tape, z, batch)?.add(&self.log_prior(z)?)
    }
}

pub(crate) fn rows_of(z: &Tensor, d: usize) -> Result<usize> {
    match z.shape() {
        &[n, cols] if cols == d => Ok(n),
        other => Err(Error::ShapeMismatch {
            op: "log_likelihood",
            lhs: other.to_vec(),
            rhs: vec![0, d],
        }),
    }
}

pub(crate) fn check_batch(batch: &[usize], len: usize) -> Result<()> {
    match batch.iter().find(|&&i| i >= len) {
        Some(&i) => Err(Error::DimensionMismatch { expected: len, found: i }),
        None => Ok(()),
    }
}

/// Row-wise `log Σ_k exp(terms_k)` for equally shaped `[n]` tensors. The
/// per-row maximum is subtracted as a constant, which leaves gradients intact.
pub fn log_sum_exp(terms: &[Tensor]) -> Result<Tensor> {
    let first = terms.first().ok_or(Error::EmptySamples)?;
    let n = first.numel();
    let shift: Vec<f64> = (0..n)
        .map(|i| terms.iter().map(|t| t.values()[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let shift = Tensor::new(shift, first.shape().to_vec())?;
    let mut acc = terms[0].sub(&shift)?.exp()?;
    for t in &terms[1..] {
        acc = acc.add(&t.sub(&shift)?.exp()?)?;
    }
    acc.ln()?.add(&shift)
}
