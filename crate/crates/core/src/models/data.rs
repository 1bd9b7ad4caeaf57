use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;

/// Inputs `x` (one row per point) and scalar targets `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionData {
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl RegressionData {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                found: y.len(),
            });
        }
        if y.is_empty() {
            return Err(Error::EmptySamples);
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `y = sin(x) + ε`, `x ~ U[lo, hi]`, `ε ~ N(0, noise²)`.
    pub fn sine(n: usize, lo: f64, hi: f64, noise: f64, rng: &mut Rng) -> Self {
        let x: Vec<f64> = (0..n).map(|_| rng.uniform_in(lo, hi)).collect();
        let y = x.iter().map(|v| v.sin() + noise * rng.normal()).collect();
        Self {
            x: Matrix::from_vec(n, 1, x).expect("sized"),
            y,
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let d = self.x.cols();
        let mut x = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            x.extend_from_slice(self.x.row(i));
        }
        Self {
            x: Matrix::from_vec(idx.len(), d, x).expect("sized"),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Seeded shuffle, then the first `round(fraction · n)` points train.
    pub fn split(&self, fraction: f64, rng: &mut Rng) -> Result<(Self, Self)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid("train fraction must lie in (0, 1)"));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        rng.shuffle(&mut idx);
        let cut = (fraction * self.len() as f64).round() as usize;
        if cut == 0 || cut == self.len() {
            return Err(Error::invalid("split leaves an empty part"));
        }
        Ok((self.subset(&idx[..cut]), self.subset(&idx[cut..])))
    }
}

/// Per-column affine standardization fitted on a training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    // constant columns are left unscaled
    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
    (mean, std)
}

impl Standardizer {
    pub fn fit(data: &RegressionData) -> Self {
        let (x_mean, x_std) = (0..data.x.cols())
            .map(|j| mean_std(&data.x.row_iter().map(|r| r[j]).collect::<Vec<_>>()))
            .unzip();
        let (y_mean, y_std) = mean_std(&data.y);
        Self {
            x_mean,
            x_std,
            y_mean,
            y_std,
        }
    }

    pub fn apply(&self, data: &RegressionData) -> RegressionData {
        let d = data.x.cols();
        let x: Vec<f64> = data
            .x
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, v)| (v - self.x_mean[k % d]) / self.x_std[k % d])
            .collect();
        RegressionData {
            x: Matrix::from_vec(data.x.rows(), d, x).expect("sized"),
            y: data.y.iter().map(|v| (v - self.y_mean) / self.y_std).collect(),
        }
    }

    pub fn unscale_y(&self, y: f64) -> f64 {
        y * self.y_std + self.y_mean
    }
}
