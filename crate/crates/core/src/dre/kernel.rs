use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn check_dims(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: b.cols(),
        });
    }
    Ok(())
}

/// Median of the `n(n-1)/2` pairwise Euclidean distances between rows.
///
/// Falls back to the smallest strictly positive distance when more than half
/// of the pairs coincide.
///
/// ```
/// use kivi_core::{dre::median_bandwidth, linalg::Matrix};
/// let x = Matrix::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
/// assert_eq!(median_bandwidth(&x).unwrap(), 2.0);
/// ```
pub fn median_bandwidth(samples: &Matrix) -> Result<f64> {
    let n = samples.rows();
    if n < 2 {
        return Err(Error::DegenerateSamples("median heuristic needs at least two samples"));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let a = samples.row(i);
        for j in i + 1..n {
            let b = samples.row(j);
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            dists.push(d2.sqrt());
        }
    }
    let m = dists.len();
    let cmp = |a: &f64, b: &f64| a.total_cmp(b);
    let (below, upper, _) = dists.select_nth_unstable_by(m / 2, cmp);
    let upper = *upper;
    let median = if m % 2 == 1 {
        upper
    } else {
        let lower = below.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    if median > 0.0 {
        return Ok(median);
    }
    dists
        .iter()
        .copied()
        .filter(|&d| d > 0.0)
        .min_by(cmp)
        .ok_or(Error::DegenerateSamples("all samples are identical"))
}

/// Squared distances `‖a_i − b_j‖²` via the expanded-norm identity, floored at 0.
pub fn squared_distances(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_dims(a, b)?;
    let an: Vec<f64> = a.row_iter().map(|r| r.iter().map(|v| v * v).sum()).collect();
    let bn: Vec<f64> = b.row_iter().map(|r| r.iter().map(|v| v * v).sum()).collect();
    let cross = a.matmul(&b.transpose())?;
    let mut out = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            out[(i, j)] = (an[i] + bn[j] - 2.0 * cross[(i, j)]).max(0.0);
        }
    }
    Ok(out)
}

/// `K[i, j] = exp(−‖a_i − b_j‖² / 2σ²)`.
pub fn rbf_gram(a: &Matrix, b: &Matrix, bandwidth: f64) -> Result<Matrix> {
    if !(bandwidth > 0.0) {
        return Err(Error::domain("rbf_gram", "bandwidth must be positive"));
    }
    let scale = -0.5 / (bandwidth * bandwidth);
    Ok(squared_distances(a, b)?.map(|d| (d * scale).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use alloc::vec;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_bandwidth(&col(&[0.0, 2.0])).unwrap(), 2.0);
        assert_eq!(median_bandwidth(&col(&[0.0, 1.0, 3.0])).unwrap(), 2.0);
        // distances {1, 3, 6, 2, 5, 3}: middle pair 3, 3
        assert_eq!(median_bandwidth(&col(&[0.0, 1.0, 3.0, 6.0])).unwrap(), 3.0);
    }

    #[test]
    fn median_degenerate_cases() {
        assert!(matches!(median_bandwidth(&col(&[1.0])), Err(Error::DegenerateSamples(_))));
        assert!(matches!(
            median_bandwidth(&col(&[2.0, 2.0, 2.0])),
            Err(Error::DegenerateSamples(_))
        ));
        // six of ten pairs coincide
        assert_eq!(median_bandwidth(&col(&[0.0, 0.0, 0.0, 0.0, 4.0])).unwrap(), 4.0);
    }

    #[test]
    fn median_matches_exhaustive_sort() {
        let mut rng = Rng::seed_from(3);
        let x = Matrix::from_vec(100, 5, rng.normals(500)).unwrap();
        let mut all = vec![];
        for i in 0..100 {
            for j in 0..i {
                let s: f64 = (0..5).map(|k| (x[(i, k)] - x[(j, k)]).powi(2)).sum();
                all.push(s.sqrt());
            }
        }
        all.sort_by(f64::total_cmp);
        let m = all.len();
        assert_eq!(m % 2, 0);
        let expected = 0.5 * (all[m / 2 - 1] + all[m / 2]);
        assert_eq!(median_bandwidth(&x).unwrap(), expected);
    }

    #[test]
    fn gram_examples() {
        let s = 0.7;
        let k = rbf_gram(&col(&[0.0]), &col(&[s * 2f64.sqrt()]), s).unwrap();
        assert!((k[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
        let mut rng = Rng::seed_from(4);
        let a = Matrix::from_vec(7, 3, rng.normals(21)).unwrap();
        let g = rbf_gram(&a, &a, 1.3).unwrap();
        for i in 0..7 {
            assert_eq!(g[(i, i)], 1.0);
            for j in 0..7 {
                assert_eq!(g[(i, j)], g[(j, i)]);
                assert!(g[(i, j)] > 0.0 && g[(i, j)] <= 1.0);
            }
        }
        assert!(rbf_gram(&a, &col(&[1.0]), 1.0).is_err());
        assert!(rbf_gram(&a, &a, 0.0).is_err());
    }

    #[test]
    fn bandwidth_scale_equivariance() {
        let mut rng = Rng::seed_from(8);
        let a = Matrix::from_vec(30, 2, rng.normals(60)).unwrap();
        let s = 4.0;
        let b = a.map(|v| v * s);
        let (sa, sb) = (median_bandwidth(&a).unwrap(), median_bandwidth(&b).unwrap());
        assert!((sb - s * sa).abs() <= 1e-12 * sb);
        let ga = rbf_gram(&a, &a, sa).unwrap();
        let gb = rbf_gram(&b, &b, sb).unwrap();
        assert!(ga.frobenius_distance(&gb) < 1e-12);
    }
}
