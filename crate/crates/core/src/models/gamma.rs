//! Shape-rate Gamma distributions for the observation precision.

#[allow(unused_imports)]
use num_traits::Float;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::special::{digamma, ln_gamma};

pub const GAMMA_PRIOR_SHAPE: f64 = 6.0;
pub const GAMMA_PRIOR_RATE: f64 = 6.0;

/// `KL(Gamma(a, b) ‖ Gamma(a0, b0))`, shape-rate parameterization.
pub fn gamma_kl(a: f64, b: f64, a0: f64, b0: f64) -> Result<f64> {
    if [a, b, a0, b0].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::domain("gamma_kl", "shape and rate must be positive"));
    }
    Ok((a - a0) * digamma(a)? - ln_gamma(a)? + ln_gamma(a0)? + a0 * (b.ln() - b0.ln()) + a * (b0 - b) / b)
}

/// [`gamma_kl`] against the fixed prior, differentiable in `log a` and `log b`.
pub fn gamma_kl_tensor(log_a: &Tensor, log_b: &Tensor) -> Result<Tensor> {
    let (a0, b0) = (GAMMA_PRIOR_SHAPE, GAMMA_PRIOR_RATE);
    let a = log_a.exp()?;
    let b = log_b.exp()?;
    let t1 = a.add_scalar(-a0)?.mul(&a.digamma()?)?;
    let t2 = a.ln_gamma()?.neg()?.add_scalar(ln_gamma(a0)?)?;
    let t3 = log_b.add_scalar(-b0.ln())?.scale(a0)?;
    let t4 = a.mul(&b.neg()?.add_scalar(b0)?)?.div(&b)?;
    t1.add(&t2)?.add(&t3)?.add(&t4)
}
