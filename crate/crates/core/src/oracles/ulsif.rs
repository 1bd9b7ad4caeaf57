//! Brute-force minimiser of the kernel ratio objective.
//!
//! Solves the full `(n_den + n_num)` first-order system of the objective in
//! 1024-bit fixed point. The system is numerically singular in `f64` (it
//! factors through the joint Gram matrix), which is why the extra precision
//! is needed; the reduced closed form is never used here.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, Mul, Sub};

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const FRACTION_BITS: u64 = 1024;
/// Pivots below `2^-PIVOT_FLOOR_BITS` are treated as exact zeros.
const PIVOT_FLOOR_BITS: u64 = 600;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Fixed(BigInt);

impl Fixed {
    fn zero() -> Self {
        Fixed(BigInt::zero())
    }

    fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if exp_bits == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        let sign = if x < 0.0 { Sign::Minus } else { Sign::Plus };
        let m = BigInt::from_biguint(sign, mantissa.into());
        let shift = FRACTION_BITS as i64 + exp;
        Fixed(if shift >= 0 { m << shift as u64 } else { m >> (-shift) as u64 })
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Fixed((BigInt::from(num) << FRACTION_BITS) / BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        let bits = self.0.bits();
        if bits <= 64 {
            return libm::ldexp(self.0.to_f64().unwrap_or(0.0), -(FRACTION_BITS as i32));
        }
        let drop = bits - 64;
        let top = (&self.0 >> drop).to_f64().unwrap_or(0.0);
        libm::ldexp(top, drop as i32 - FRACTION_BITS as i32)
    }

    fn div(&self, rhs: &Fixed) -> Fixed {
        Fixed((&self.0 << FRACTION_BITS) / &rhs.0)
    }

    fn abs_cmp(&self, rhs: &Fixed) -> Ordering {
        self.0.abs().cmp(&rhs.0.abs())
    }

    fn is_negligible(&self) -> bool {
        self.0.abs().bits() <= FRACTION_BITS - PIVOT_FLOOR_BITS
    }
}

impl Add for &Fixed {
    type Output = Fixed;
    fn add(self, rhs: &Fixed) -> Fixed {
        Fixed(&self.0 + &rhs.0)
    }
}

impl Sub for &Fixed {
    type Output = Fixed;
    fn sub(self, rhs: &Fixed) -> Fixed {
        Fixed(&self.0 - &rhs.0)
    }
}

impl Mul for &Fixed {
    type Output = Fixed;
    fn mul(self, rhs: &Fixed) -> Fixed {
        Fixed((&self.0 * &rhs.0) >> FRACTION_BITS)
    }
}

/// Gram matrix from explicit coordinate differences.
fn gram(a: &Matrix, b: &Matrix, sigma: f64) -> Vec<Vec<Fixed>> {
    a.row_iter()
        .map(|x| {
            b.row_iter()
                .map(|y| {
                    let d2: f64 = x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum();
                    Fixed::from_f64(libm::exp(-d2 / (2.0 * sigma * sigma)))
                })
                .collect()
        })
        .collect()
}

fn gaussian_elimination(mut a: Vec<Vec<Fixed>>, mut b: Vec<Fixed>) -> Result<Vec<Fixed>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs_cmp(&a[j][col]))
            .expect("non-empty range");
        if a[pivot][col].is_negligible() {
            return Err(Error::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (head, tail) = a.split_at_mut(col + 1);
        let prow = &head[col];
        for (offset, row) in tail.iter_mut().enumerate() {
            if row[col].0.is_zero() {
                continue;
            }
            let factor = row[col].div(&prow[col]);
            for k in col..n {
                row[k] = &row[k] - &(&factor * &prow[k]);
            }
            let r = col + 1 + offset;
            b[r] = &b[r] - &(&factor * &b[col]);
        }
    }
    let mut x = alloc::vec![Fixed::zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i].clone();
        for k in i + 1..n {
            acc = &acc - &(&a[i][k] * &x[k]);
        }
        x[i] = acc.div(&a[i][i]);
    }
    Ok(x)
}

/// Coefficients `(α, β)` minimising the empirical objective, where `α`
/// weights kernels on the denominator samples and `β` on the numerator ones.
pub fn brute_force_ulsif(
    num: &Matrix,
    den: &Matrix,
    bandwidth: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if num.rows() == 0 || den.rows() == 0 {
        return Err(Error::EmptySamples);
    }
    if num.cols() != den.cols() {
        return Err(Error::DimensionMismatch {
            expected: den.cols(),
            found: num.cols(),
        });
    }
    let (np, nq) = (den.rows(), num.rows());
    let n = np + nq;
    let all = den.vstack(num)?;
    // Rows of the joint Gram: k(all_i, ·) over [den; num].
    let k_all = gram(&all, &all, bandwidth);
    let lam = Fixed::from_f64(lambda);
    let inv_np = Fixed::from_ratio(1, np as i64);
    let inv_nq = Fixed::from_ratio(1, nq as i64);

    // Hessian: (1/n_p) Σ_k A_ki A_kj + λ K_all[i][j], with A = K_all[0..np].
    let mut h = alloc::vec![alloc::vec![Fixed::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut acc = Fixed::zero();
            for row in &k_all[..np] {
                acc = &acc + &(&row[i] * &row[j]);
            }
            let v = &(&acc * &inv_np) + &(&lam * &k_all[i][j]);
            h[j][i] = v.clone();
            h[i][j] = v;
        }
    }
    // Linear term: (1/n_q) Σ_j k(all_i, num_j).
    let rhs: Vec<Fixed> = k_all
        .iter()
        .map(|row| {
            let s = row[np..].iter().fold(Fixed::zero(), |a, v| &a + v);
            &s * &inv_nq
        })
        .collect();

    let x = gaussian_elimination(h, rhs)?;
    let coef: Vec<f64> = x.iter().map(Fixed::to_f64).collect();
    Ok((coef[..np].to_vec(), coef[np..].to_vec()))
}
