use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::config::KiviConfig;
use super::elbo::{finish, StepOutput};
use super::kl::kl_from_samples;
use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::Decoder;
use crate::posteriors::{standard_normal_log_density, AmortizedPosterior};
use crate::rng::Rng;

/// Floor on the moment-matched standard deviation.
pub const STD_FLOOR: f64 = 1e-6;

/// Column means and unbiased standard deviations (floored at
/// [`STD_FLOOR`]) of the rows of `z`.
pub fn moment_match(z: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = z.rows();
    if n < 2 {
        return Err(Error::DegenerateBatch("moment matching needs at least two draws"));
    }
    let mean = z.column_means();
    let mut std = Vec::with_capacity(z.cols());
    for (j, m) in mean.iter().enumerate() {
        let ss: f64 = z.row_iter().map(|r| (r[j] - m) * (r[j] - m)).sum();
        if ss == 0.0 {
            return Err(Error::DegenerateBatch("a latent dimension has zero spread"));
        }
        std.push((ss / (n - 1) as f64).sqrt().max(STD_FLOOR));
    }
    Ok((mean, std))
}

/// KIVI with Adaptive Contrast for a local-latent model.
///
/// For each row of `x`, `max(n_q, m)` draws are taken from `q(z|x)`. The
/// first `n_q` give the (detached) mean and std of the auxiliary Gaussian
/// `r`, and after standardization they feed the ratio estimate of
/// `KL(q̂ ‖ N(0, I))` against `n_p` standard normal draws. The first `m`
/// give `E_q[log p(x|z) + log p(z) − log r(z)]`. Per-row terms are summed
/// and scaled by `data_len / rows`.
pub fn adaptive_contrast_step<Q: AmortizedPosterior + ?Sized>(
    decoder: &Decoder,
    posterior: &Q,
    x: &Matrix,
    data_len: usize,
    config: &KiviConfig,
    rng: &mut Rng,
) -> Result<StepOutput> {
    let (n_q, m) = (config.n_q, config.m);
    let s = n_q.max(m);
    let d = posterior.latent_dim();
    let tape = Tape::new();
    let z = posterior.sample_given(&tape, x, s, rng)?.z;
    let joint = decoder
        .log_likelihood(&tape, &z, x, s)?
        .add(&decoder.log_prior(&z)?)?;

    let mut first = Vec::with_capacity(x.rows());
    let mut kls = Vec::with_capacity(x.rows());
    for b in 0..x.rows() {
        let zb = z.narrow(0, b * s, s)?;
        let (mean, std) = moment_match(&zb.narrow(0, 0, n_q)?.detach().to_matrix()?)?;
        let log_std_sum: f64 = std.iter().map(|v| v.ln()).sum();
        let z_hat = zb.sub(&Tensor::new(mean, [d])?)?.div(&Tensor::new(std, [d])?)?;
        let log_r = standard_normal_log_density(&z_hat.narrow(0, 0, m)?)?.add_scalar(-log_std_sum)?;
        first.push(joint.narrow(0, b * s, m)?.sub(&log_r)?.mean()?);
        let hat_q = z_hat.narrow(0, 0, n_q)?;
        let normal = Matrix::from_vec(config.n_p, d, rng.normals(config.n_p * d))?;
        kls.push(kl_from_samples(&hat_q.detach().to_matrix()?, &hat_q, &normal, &config.kernel, config.reverse_trick)?.value);
    }
    let scale = data_len as f64 / x.rows() as f64;
    finish(&sum(&first)?.scale(scale)?, &sum(&kls)?.scale(scale)?)
}

/// Plain reparameterized ELBO for an amortized posterior with a tractable
/// density: per row, `mean[log p(x|z) + log p(z) − log q(z|x)]` over
/// `per_point` draws, summed and scaled like [`adaptive_contrast_step`].
/// The reported KL is the Monte Carlo `E[log q − log p(z)]`.
pub fn amortized_elbo_step<Q: AmortizedPosterior + ?Sized>(
    decoder: &Decoder,
    posterior: &Q,
    x: &Matrix,
    data_len: usize,
    per_point: usize,
    rng: &mut Rng,
) -> Result<StepOutput> {
    let tape = Tape::new();
    let sample = posterior.sample_given(&tape, x, per_point, rng)?;
    let log_q = sample
        .log_density
        .ok_or_else(|| Error::invalid("posterior has no tractable density"))?;
    let ll = decoder.log_likelihood(&tape, &sample.z, x, per_point)?;
    let kl = log_q.sub(&decoder.log_prior(&sample.z)?)?;
    let scale = data_len as f64 / (x.rows() * per_point) as f64;
    finish(&ll.sum()?.scale(scale)?, &kl.sum()?.scale(scale)?)
}

fn sum(terms: &[Tensor]) -> Result<Tensor> {
    let mut it = terms.iter();
    let mut acc = it.next().ok_or(Error::EmptySamples)?.clone();
    for t in it {
        acc = acc.add(t)?;
    }
    Ok(acc)
}
