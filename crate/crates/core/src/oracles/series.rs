//! Digamma from its defining series, independent of the recurrence and
//! asymptotic expansion used in production.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;
const TERMS: usize = 2000;

/// `ψ(x) = −γ + Σ_{k≥0} [1/(k+1) − 1/(k+x)]`, with the tail after
/// [`TERMS`] terms closed by Euler–Maclaurin.
pub fn digamma_series(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("digamma_series", "x must be positive and finite"));
    }
    // Sum the small terms first.
    let head: f64 = (0..TERMS)
        .rev()
        .map(|k| {
            let k = k as f64;
            (x - 1.0) / ((k + 1.0) * (k + x))
        })
        .sum();
    let k = TERMS as f64;
    let (a, b) = (k + 1.0, k + x);
    let integral = (b / a).ln();
    let f = 1.0 / a - 1.0 / b;
    let f1 = -1.0 / (a * a) + 1.0 / (b * b);
    let f3 = -6.0 / a.powi(4) + 6.0 / b.powi(4);
    Ok(-EULER_GAMMA + head + integral + 0.5 * f - f1 / 12.0 + f3 / 720.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::digamma;

    #[test]
    fn known_values() {
        assert!((digamma_series(1.0).unwrap() + EULER_GAMMA).abs() < 1e-15);
        let half = -EULER_GAMMA - 2.0 * core::f64::consts::LN_2;
        assert!((digamma_series(0.5).unwrap() - half).abs() < 1e-13);
        assert!(digamma_series(0.0).is_err());
    }

    #[test]
    fn production_digamma_matches_series() {
        let mut x = 0.05;
        while x < 60.0 {
            let (a, b) = (digamma(x).unwrap(), digamma_series(x).unwrap());
            assert!((a - b).abs() <= 1e-10, "x = {x}: {a} vs {b}");
            x *= 1.13;
        }
    }
}
