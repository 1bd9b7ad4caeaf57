//! Sample summaries used in metrics and plot data.

use kivi_core::linalg::Matrix;

/// Column means and the unbiased covariance.
pub fn moments(samples: &Matrix) -> (Vec<f64>, Matrix) {
    (samples.column_means(), samples.covariance())
}

/// Correlation between the first two columns.
pub fn correlation(samples: &Matrix) -> f64 {
    let c = samples.covariance();
    c[(0, 1)] / (c[(0, 0)] * c[(1, 1)]).sqrt()
}

/// Fraction of the values within `window` of `center`.
pub fn mass_near(values: &[f64], center: f64, window: f64) -> f64 {
    values.iter().filter(|v| (*v - center).abs() <= window).count() as f64 / values.len() as f64
}

/// Equal-width histogram over `[lo, hi]`; values outside are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// Number of values that fell outside the range.
    pub outside: u64,
}

impl Histogram {
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        let mut outside = 0;
        let width = (hi - lo) / bins as f64;
        for &v in values {
            if v < lo || v > hi || !v.is_finite() {
                outside += 1;
                continue;
            }
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { lo, hi, counts, outside }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn edges(&self, b: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + b as f64 * w, self.lo + (b + 1) as f64 * w)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.outside
    }

    /// Count divided by (total · width), so the densities integrate to the
    /// fraction of values inside the range.
    pub fn densities(&self) -> Vec<f64> {
        let scale = self.total() as f64 * self.width();
        self.counts.iter().map(|&c| c as f64 / scale).collect()
    }

    /// Plug-in `KL(histogram ‖ p)` with `p` integrated over each bin by
    /// the midpoint rule; empty bins contribute nothing.
    pub fn kl_to(&self, density: impl Fn(f64) -> f64) -> f64 {
        let w = self.width();
        let n = self.total() as f64;
        (0..self.counts.len())
            .filter(|&b| self.counts[b] > 0)
            .map(|b| {
                let (lo, hi) = self.edges(b);
                let q = self.counts[b] as f64 / n;
                let p = density(0.5 * (lo + hi)) * w;
                q * (q / p.max(f64::MIN_POSITIVE)).ln()
            })
            .sum()
    }
}

/// Frobenius distance of a square matrix from the identity.
pub fn distance_from_identity(m: &Matrix) -> f64 {
    m.frobenius_distance(&Matrix::identity(m.rows()))
}

pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}
