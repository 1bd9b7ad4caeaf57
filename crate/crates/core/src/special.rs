//! Digamma, trigamma and log-gamma for the Gamma-precision terms.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const LIFT: f64 = 6.0;

/// ψ(x) for x > 0: lift with ψ(x) = ψ(x+1) − 1/x until x ≥ 6, then the
/// asymptotic series in 1/x².
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("digamma", "x must be positive and finite"));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < LIFT {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    // Bernoulli-number coefficients B_2k / 2k.
    let series = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0
                    - r * (1.0 / 240.0
                        - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
    Ok(acc + x.ln() - 0.5 / x - series)
}

/// ψ′(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("trigamma", "x must be positive and finite"));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < LIFT {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let series = (1.0 / x)
        * r
        * (1.0 / 6.0
            - r * (1.0 / 30.0
                - r * (1.0 / 42.0
                    - r * (1.0 / 30.0 - r * (5.0 / 66.0 - r * (691.0 / 2730.0 - r * 7.0 / 6.0))))));
    Ok(acc + 1.0 / x + 0.5 * r + series)
}

pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("ln_gamma", "x must be positive and finite"));
    }
    Ok(libm::lgamma(x))
}
