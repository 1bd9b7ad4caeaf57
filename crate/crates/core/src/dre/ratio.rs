use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::kernel::{median_bandwidth, rbf_gram};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};

pub const DEFAULT_CLIP: f64 = 1e-8;

fn default_clip() -> f64 {
    DEFAULT_CLIP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Fixed RBF bandwidth; `None` recomputes the median heuristic on every fit.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    pub lambda: f64,
    #[serde(default = "default_clip")]
    pub clip: f64,
}

impl KernelConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            bandwidth: None,
            lambda,
            clip: DEFAULT_CLIP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.bandwidth {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("kernel bandwidth must be positive"));
            }
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("kernel lambda must be positive"));
        }
        if !(self.clip > 0.0) {
            return Err(Error::invalid("kernel clip must be positive"));
        }
        Ok(())
    }
}

/// Fitted ratio `r(z) = Σ α_i k(den_i, z) + Σ β_j k(num_j, z)`, floored at `clip`.
#[derive(Clone, Debug)]
pub struct RatioModel {
    den: Matrix,
    num: Matrix,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    bandwidth: f64,
    lambda: f64,
    clip: f64,
}

/// Fits the ratio `numerator density / denominator density` in closed form.
pub fn fit_ratio(num: &Matrix, den: &Matrix, config: &KernelConfig) -> Result<RatioModel> {
    config.validate()?;
    if num.rows() == 0 || den.rows() == 0 {
        return Err(Error::EmptySamples);
    }
    if num.cols() != den.cols() {
        return Err(Error::DimensionMismatch {
            expected: den.cols(),
            found: num.cols(),
        });
    }
    let bandwidth = match config.bandwidth {
        Some(s) => s,
        None => median_bandwidth(&den.vstack(num)?)?,
    };
    let (n_den, n_num) = (den.rows() as f64, num.rows() as f64);
    let lambda = config.lambda;

    let mut system = rbf_gram(den, den, bandwidth)?.map(|k| k / n_den);
    for i in 0..den.rows() {
        system[(i, i)] += lambda;
    }
    let cross_sums = rbf_gram(den, num, bandwidth)?.row_sums();
    let scale = -1.0 / (lambda * n_den * n_num);
    let rhs: Vec<f64> = cross_sums.iter().map(|s| s * scale).collect();
    let alpha = Cholesky::factor(&system)?.solve(&rhs)?;
    let beta = vec![1.0 / (lambda * n_num); num.rows()];

    Ok(RatioModel {
        den: den.clone(),
        num: num.clone(),
        alpha,
        beta,
        bandwidth,
        lambda,
        clip: config.clip,
    })
}

impl RatioModel {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn denominator_centers(&self) -> &Matrix {
        &self.den
    }

    pub fn numerator_centers(&self) -> &Matrix {
        &self.num
    }

    pub fn dim(&self) -> usize {
        self.den.cols()
    }

    /// Replaces the coefficients, keeping centers and bandwidth.
    pub fn with_coefficients(mut self, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != self.alpha.len() || beta.len() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alpha.len() + self.beta.len(),
                found: alpha.len() + beta.len(),
            });
        }
        self.alpha = alpha;
        self.beta = beta;
        Ok(self)
    }

    fn check_points(&self, cols: usize) -> Result<()> {
        if cols != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: cols,
            });
        }
        Ok(())
    }

    /// Unclipped ratio values at each row of `points`.
    pub fn evaluate_raw(&self, points: &Matrix) -> Result<Vec<f64>> {
        self.check_points(points.cols())?;
        let kd = rbf_gram(points, &self.den, self.bandwidth)?;
        let kn = rbf_gram(points, &self.num, self.bandwidth)?;
        Ok((0..points.rows())
            .map(|i| dot(kd.row(i), &self.alpha) + dot(kn.row(i), &self.beta))
            .collect())
    }

    /// Clipped ratio values at each row of `points`.
    pub fn evaluate(&self, points: &Matrix) -> Result<Vec<f64>> {
        Ok(self
            .evaluate_raw(points)?
            .into_iter()
            .map(|r| r.max(self.clip))
            .collect())
    }

    /// Clipped ratio at the rows of an `[m, d]` tensor. Gradients reach the
    /// points only: centers and coefficients enter as constants.
    pub fn evaluate_tensor(&self, points: &Tensor) -> Result<Tensor> {
        let &[m, d] = points.shape() else {
            return Err(Error::ShapeMismatch {
                op: "evaluate_ratio",
                lhs: points.shape().to_vec(),
                rhs: vec![0, self.dim()],
            });
        };
        self.check_points(d)?;
        let centers = self.den.vstack(&self.num)?;
        let n = centers.rows();
        let center_norms: Vec<f64> = centers
            .row_iter()
            .map(|r| r.iter().map(|v| v * v).sum())
            .collect();
        let coef: Vec<f64> = self.alpha.iter().chain(&self.beta).copied().collect();

        let point_norms = points.square()?.sum_axis(1)?.reshape([m, 1])?;
        let spread = point_norms.matmul(&Tensor::ones([1, n]))?;
        let cross = points.matmul(&Tensor::from_matrix(&centers.transpose()))?;
        let sq = spread
            .add(&Tensor::new(center_norms, [n])?)?
            .sub(&cross.scale(2.0)?)?
            .relu()?;
        let k = sq.scale(-0.5 / (self.bandwidth * self.bandwidth))?.exp()?;
        k.matmul(&Tensor::new(coef, [n, 1])?)?
            .reshape([m])?
            .clamp_min(self.clip)
    }
}

/// Gram blocks for the empirical objective; `p` is the denominator set and
/// `q` the numerator set.
struct Blocks {
    kp: Matrix,
    kpq: Matrix,
    kq: Matrix,
}

impl Blocks {
    fn new(num: &Matrix, den: &Matrix, bandwidth: f64) -> Result<Self> {
        if num.rows() == 0 || den.rows() == 0 {
            return Err(Error::EmptySamples);
        }
        Ok(Self {
            kp: rbf_gram(den, den, bandwidth)?,
            kpq: rbf_gram(den, num, bandwidth)?,
            kq: rbf_gram(num, num, bandwidth)?,
        })
    }

    fn check(&self, alpha: &[f64], beta: &[f64]) -> Result<()> {
        if alpha.len() != self.kp.rows() || beta.len() != self.kq.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.kp.rows() + self.kq.rows(),
                found: alpha.len() + beta.len(),
            });
        }
        Ok(())
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Squared-loss estimate plus `λ/2` RKHS norm, as a function of the coefficients.
pub fn empirical_objective(
    alpha: &[f64],
    beta: &[f64],
    num: &Matrix,
    den: &Matrix,
    bandwidth: f64,
    lambda: f64,
) -> Result<f64> {
    let b = Blocks::new(num, den, bandwidth)?;
    b.check(alpha, beta)?;
    let (np, nq) = (den.rows() as f64, num.rows() as f64);
    let kp_a = b.kp.matvec(alpha)?;
    let kpq_b = b.kpq.matvec(beta)?;
    let ones = vec![1.0; num.rows()];
    let kpq_1 = b.kpq.matvec(&ones)?;
    let kq_1 = b.kq.matvec(&ones)?;
    let kq_b = b.kq.matvec(beta)?;
    let fit = dot(&kp_a, &kp_a) + dot(&kpq_b, &kpq_b) + 2.0 * dot(&kp_a, &kpq_b);
    let linear = dot(alpha, &kpq_1) + dot(beta, &kq_1);
    let norm = dot(alpha, &kp_a) + dot(beta, &kq_b) + 2.0 * dot(alpha, &kpq_b);
    Ok(fit / (2.0 * np) - linear / nq + 0.5 * lambda * norm)
}

/// Partial derivatives of [`empirical_objective`] and the diagonal of its Hessian.
pub struct ObjectiveGradient {
    pub d_alpha: Vec<f64>,
    pub d_beta: Vec<f64>,
    pub hessian_diagonal: Vec<f64>,
}

impl ObjectiveGradient {
    /// `max |∇L| / (1 + max |diag H|)`.
    pub fn relative_residual(&self) -> f64 {
        let g = self.d_alpha.iter().chain(&self.d_beta).fold(0.0f64, |m, v| m.max(v.abs()));
        let h = self.hessian_diagonal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        g / (1.0 + h)
    }
}

pub fn objective_gradient(
    alpha: &[f64],
    beta: &[f64],
    num: &Matrix,
    den: &Matrix,
    bandwidth: f64,
    lambda: f64,
) -> Result<ObjectiveGradient> {
    let b = Blocks::new(num, den, bandwidth)?;
    b.check(alpha, beta)?;
    let (np, nq) = (den.rows() as f64, num.rows() as f64);
    let kqp = b.kpq.transpose();
    // fitted ratio at the denominator samples and the RKHS-norm direction
    let r_den = add(&b.kp.matvec(alpha)?, &b.kpq.matvec(beta)?);
    let ones = vec![1.0; num.rows()];
    let kpq_1 = b.kpq.matvec(&ones)?;
    let kq_1 = b.kq.matvec(&ones)?;

    let kp_r = b.kp.matvec(&r_den)?;
    let kqp_r = kqp.matvec(&r_den)?;
    let d_alpha: Vec<f64> = (0..alpha.len())
        .map(|i| kp_r[i] / np - kpq_1[i] / nq + lambda * r_den[i])
        .collect();
    let norm_beta = add(&kqp.matvec(alpha)?, &b.kq.matvec(beta)?);
    let d_beta: Vec<f64> = (0..beta.len())
        .map(|j| kqp_r[j] / np - kq_1[j] / nq + lambda * norm_beta[j])
        .collect();

    let mut hessian_diagonal = Vec::with_capacity(alpha.len() + beta.len());
    for i in 0..alpha.len() {
        let row = b.kp.row(i);
        hessian_diagonal.push(dot(row, row) / np + lambda * b.kp[(i, i)]);
    }
    for j in 0..beta.len() {
        let col = kqp.row(j);
        hessian_diagonal.push(dot(col, col) / np + lambda * b.kq[(j, j)]);
    }
    Ok(ObjectiveGradient {
        d_alpha,
        d_beta,
        hessian_diagonal,
    })
}
