use alloc::vec::Vec;

use super::config::KiviConfig;
use crate::autodiff::{Tape, Tensor};
use crate::dre::{fit_ratio, KernelConfig, RatioModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::TargetModel;
use crate::posteriors::ImplicitPosterior;
use crate::rng::Rng;

/// A KL estimate together with the ratio model it was computed from.
pub struct KlEstimate {
    pub value: Tensor,
    pub ratio: RatioModel,
}

/// KL from an already fitted ratio, evaluated at `eval` (`[n, d]`).
/// With `reverse` the ratio is `prior / posterior` and the estimate is
/// `−mean log r`; otherwise it is `posterior / prior` and `+mean log r`.
/// Gradients reach `eval` only.
pub fn kl_with_ratio(ratio: &RatioModel, eval: &Tensor, reverse: bool) -> Result<Tensor> {
    let mean_log = ratio.evaluate_tensor(eval)?.ln()?.mean()?;
    if reverse {
        mean_log.neg()
    } else {
        Ok(mean_log)
    }
}

/// Fits the ratio between detached posterior draws `centers` and `prior`
/// draws, then evaluates the KL estimate at `eval`.
pub fn kl_from_samples(
    centers: &Matrix,
    eval: &Tensor,
    prior: &Matrix,
    kernel: &KernelConfig,
    reverse: bool,
) -> Result<KlEstimate> {
    let ratio = if reverse {
        fit_ratio(prior, centers, kernel)?
    } else {
        fit_ratio(centers, prior, kernel)?
    };
    Ok(KlEstimate {
        value: kl_with_ratio(&ratio, eval, reverse)?,
        ratio,
    })
}

fn column_block(m: &Matrix, start: usize, width: usize) -> Matrix {
    let data: Vec<f64> = m.row_iter().flat_map(|r| r[start..start + width].iter().copied()).collect();
    Matrix::from_vec(m.rows(), width, data).expect("sized")
}

/// Joint estimate, or the sum over `blocks` of per-block estimates.
pub(crate) fn kl_term(
    centers: &Matrix,
    eval: &Tensor,
    prior: &Matrix,
    blocks: Option<&[usize]>,
    config: &KiviConfig,
) -> Result<Tensor> {
    let Some(blocks) = blocks.filter(|b| b.len() > 1) else {
        return Ok(kl_from_samples(centers, eval, prior, &config.kernel, config.reverse_trick)?.value);
    };
    let mut total: Option<Tensor> = None;
    let mut start = 0;
    for &w in blocks {
        let part = kl_from_samples(
            &column_block(centers, start, w),
            &eval.narrow(1, start, w)?,
            &column_block(prior, start, w),
            &config.kernel,
            config.reverse_trick,
        )?
        .value;
        total = Some(match total {
            Some(t) => t.add(&part)?,
            None => part,
        });
        start += w;
    }
    total.ok_or(Error::EmptySamples)
}

/// Draws `n_q` posterior and `n_p` prior samples and returns the KL
/// estimate on `tape`.
pub fn estimate_kl<P, M>(posterior: &P, model: &M, tape: &Tape, config: &KiviConfig, rng: &mut Rng) -> Result<Tensor>
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
    let z = posterior.sample(tape, config.n_q, rng)?.z;
    let eval = if config.independent_eval {
        posterior.sample(tape, config.n_q, rng)?.z
    } else {
        z.clone()
    };
    let prior = model.sample_prior(config.n_p, rng);
    let blocks = posterior.blocks();
    kl_term(&z.detach().to_matrix()?, &eval, &prior, config.per_block_kl.then_some(&blocks[..]), config)
}
