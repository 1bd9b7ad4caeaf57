use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// `KL(N(μ₁, σ₁²) ‖ N(μ₂, σ₂²))` for diagonal Gaussians.
pub fn analytic_gaussian_kl(mu1: &[f64], sd1: &[f64], mu2: &[f64], sd2: &[f64]) -> Result<f64> {
    let d = mu1.len();
    for len in [sd1.len(), mu2.len(), sd2.len()] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, found: len });
        }
    }
    if sd1.iter().chain(sd2).any(|&s| !(s > 0.0)) {
        return Err(Error::domain("analytic_gaussian_kl", "standard deviations must be positive"));
    }
    Ok(0.5
        * (0..d)
            .map(|i| {
                let ratio = sd1[i] / sd2[i];
                let shift = (mu2[i] - mu1[i]) / sd2[i];
                ratio * ratio + shift * shift - 1.0 - 2.0 * ratio.ln()
            })
            .sum::<f64>())
}

/// Uniform trapezoid grid on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub const DEFAULT_POINTS: usize = (1 << 15) + 1;

    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(hi > lo) || points < 2 {
            return Err(Error::invalid("grid needs hi > lo and at least two points"));
        }
        Ok(Self { lo, hi, points })
    }

    /// `mean ± 12 std` with the default resolution.
    pub fn around(mean: f64, std: f64) -> Self {
        Self {
            lo: mean - 12.0 * std,
            hi: mean + 12.0 * std,
            points: Self::DEFAULT_POINTS,
        }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step()
    }

    /// Trapezoid rule for `f` over the grid.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let n = self.points;
        let inner: f64 = (1..n - 1).map(|i| f(self.node(i))).sum();
        self.step() * (inner + 0.5 * (f(self.lo) + f(self.hi)))
    }
}

/// Trapezoid-rule `∫ q log(q/p)` over `grid`.
pub fn quadrature_kl_1d(q: impl Fn(f64) -> f64, p: impl Fn(f64) -> f64, grid: &Grid) -> Result<f64> {
    let mut bad = None;
    let value = grid.integrate(|z| {
        let qz = q(z);
        if qz <= 0.0 {
            return 0.0;
        }
        let pz = p(z);
        if !(pz > 0.0) {
            bad.get_or_insert(z);
            return 0.0;
        }
        qz * (qz / pz).ln()
    });
    match bad {
        Some(z) => Err(Error::domain("quadrature_kl_1d", format!("p vanishes at {z} where q > 0"))),
        None => Ok(value),
    }
}

pub fn normal_density(z: f64, mean: f64, std: f64) -> f64 {
    let u = (z - mean) / std;
    (-0.5 * u * u).exp() / (std * (2.0 * core::f64::consts::PI).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_examples() {
        assert_eq!(analytic_gaussian_kl(&[0.3, 1.0], &[2.0, 0.5], &[0.3, 1.0], &[2.0, 0.5]).unwrap(), 0.0);
        assert!((analytic_gaussian_kl(&[1.0], &[1.0], &[0.0], &[1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(analytic_gaussian_kl(&[0.0], &[0.0], &[0.0], &[1.0]).is_err());
        assert!(analytic_gaussian_kl(&[0.0], &[1.0], &[0.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn quadrature_matches_analytic() {
        for (m1, s1, m2, s2) in [(0.0, 1.0, 0.0, 1.0), (1.0, 0.7, -0.5, 1.3), (2.0, 2.0, 0.0, 1.0)] {
            let q = |z| normal_density(z, m1, s1);
            let p = |z| normal_density(z, m2, s2);
            let quad = quadrature_kl_1d(q, p, &Grid::around(m1, s1)).unwrap();
            let exact = analytic_gaussian_kl(&[m1], &[s1], &[m2], &[s2]).unwrap();
            assert!((quad - exact).abs() <= 1e-8, "{quad} vs {exact}");
        }
    }

    #[test]
    fn mixture_against_normal_is_stable_under_refinement() {
        let gmm = |z: f64| 0.5 * normal_density(z, -3.0, 1.0) + 0.5 * normal_density(z, 3.0, 1.0);
        let std = |z: f64| normal_density(z, 0.0, 1.0);
        let coarse = Grid::new(-15.0, 15.0, (1 << 14) + 1).unwrap();
        let fine = Grid::new(-15.0, 15.0, (1 << 15) + 1).unwrap();
        let a = quadrature_kl_1d(gmm, std, &coarse).unwrap();
        let b = quadrature_kl_1d(gmm, std, &fine).unwrap();
        assert!(b > 0.0);
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn vanishing_p_is_an_error() {
        let q = |z| normal_density(z, 0.0, 1.0);
        let p = |z: f64| if z > 0.0 { 2.0 * normal_density(z, 0.0, 1.0) } else { 0.0 };
        assert!(quadrature_kl_1d(q, p, &Grid::around(0.0, 1.0)).is_err());
    }
}
