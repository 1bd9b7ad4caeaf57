#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::config::KiviConfig;
use super::kl::kl_term;
use crate::autodiff::{Gradients, Tape, Tensor};
use crate::error::{Error, Result};
use crate::models::TargetModel;
use crate::posteriors::ImplicitPosterior;
use crate::rng::Rng;

/// Scalar summary of one objective evaluation; `elbo` is always exactly
/// `reconstruction − kl`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElboEstimate {
    pub elbo: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

impl ElboEstimate {
    pub fn new(reconstruction: f64, kl: f64) -> Self {
        Self {
            elbo: reconstruction - kl,
            reconstruction,
            kl,
        }
    }
}

/// An objective evaluation with gradients of `−ELBO`.
pub struct StepOutput {
    pub estimate: ElboEstimate,
    pub gradients: Gradients,
}

/// Differentiates `kl − reconstruction` and packages the result. A
/// non-finite loss is reported with iteration 0; [`optimize`](super::optimize)
/// replaces it with the real index.
pub(crate) fn finish(reconstruction: &Tensor, kl: &Tensor) -> Result<StepOutput> {
    let loss = kl.sub(reconstruction)?;
    if !loss.item()?.is_finite() {
        return Err(Error::NonFiniteLoss { iteration: 0 });
    }
    let estimate = ElboEstimate::new(reconstruction.item()?, kl.item()?);
    Ok(StepOutput {
        estimate,
        gradients: loss.backward()?,
    })
}

fn add_extra<M: TargetModel + ?Sized>(model: &M, tape: &Tape, kl: Tensor) -> Result<Tensor> {
    match model.extra_kl(tape)? {
        Some(extra) => kl.add(&extra),
        None => Ok(kl),
    }
}

fn check_dims<P, M>(posterior: &P, model: &M) -> Result<()>
where
    P: ImplicitPosterior + ?Sized,
    M: TargetModel + ?Sized,
{
    if posterior.dim() != model.latent_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.latent_dim(),
            found: posterior.dim(),
        });
    }
    Ok(())
}

/// One KIVI objective evaluation on `batch` (indices into the model's data).
///
/// `max(n_q, m)` posterior draws are taken; the first `n_q` fit and evaluate
/// the ratio, the first `m` enter the reconstruction term.
pub fn elbo_step<P, M>(model: &M, posterior: &P, batch: &[usize], config: &KiviConfig, rng: &mut Rng) -> Result<StepOutput>
where
    P: ImplicitPosterior + ?Sized,
    M: TargetModel + ?Sized,
{
    check_dims(posterior, model)?;
    let tape = Tape::new();
    let z = posterior.sample(&tape, config.n_q.max(config.m), rng)?.z;
    let z_kl = z.narrow(0, 0, config.n_q)?;
    let eval = if config.independent_eval {
        posterior.sample(&tape, config.n_q, rng)?.z
    } else {
        z_kl.clone()
    };
    let prior = model.sample_prior(config.n_p, rng);
    let blocks = posterior.blocks();
    let kl = kl_term(
        &z_kl.detach().to_matrix()?,
        &eval,
        &prior,
        config.per_block_kl.then_some(&blocks[..]),
        config,
    )?;
    let kl = add_extra(model, &tape, kl)?;
    let reconstruction = if batch.is_empty() {
        Tensor::scalar(0.0)
    } else {
        model.log_likelihood(&tape, &z.narrow(0, 0, config.m)?, batch)?.mean()?
    };
    finish(&reconstruction, &kl)
}

/// Standard reparameterized ELBO for a posterior with a tractable density,
/// `mean[log p(x|z) + log p(z) − log q(z)]` over `samples` draws.
pub fn tractable_elbo_step<P, M>(model: &M, posterior: &P, batch: &[usize], samples: usize, rng: &mut Rng) -> Result<StepOutput>
where
    P: ImplicitPosterior + ?Sized,
    M: TargetModel + ?Sized,
{
    check_dims(posterior, model)?;
    let tape = Tape::new();
    let s = posterior.sample(&tape, samples, rng)?;
    let log_q = s
        .log_density
        .ok_or_else(|| Error::invalid("posterior has no tractable density"))?;
    let kl = log_q.sub(&model.log_prior(&s.z)?)?.mean()?;
    let kl = add_extra(model, &tape, kl)?;
    let reconstruction = if batch.is_empty() {
        Tensor::scalar(0.0)
    } else {
        model.log_likelihood(&tape, &s.z, batch)?.mean()?
    };
    finish(&reconstruction, &kl)
}
