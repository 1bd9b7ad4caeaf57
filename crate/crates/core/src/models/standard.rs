use alloc::vec::Vec;

use super::{rows_of, TargetModel};
use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::posteriors::standard_normal_log_density;
use crate::rng::Rng;

/// `N(0, I)` prior without data, so that the ELBO is `−KL(q ‖ N(0, I))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StandardNormal {
    pub dim: usize,
}

impl TargetModel for StandardNormal {
    fn latent_dim(&self) -> usize {
        self.dim
    }

    fn data_len(&self) -> usize {
        0
    }

    fn sample_prior(&self, n: usize, rng: &mut Rng) -> Matrix {
        Matrix::from_vec(n, self.dim, rng.normals(n * self.dim)).expect("sized")
    }

    fn log_prior(&self, z: &Tensor) -> Result<Tensor> {
        rows_of(z, self.dim)?;
        standard_normal_log_density(z)
    }

    fn log_likelihood(&self, _tape: &Tape, z: &Tensor, _batch: &[usize]) -> Result<Tensor> {
        Ok(Tensor::zeros([rows_of(z, self.dim)?]))
    }
}

impl Parameterized for StandardNormal {
    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }
}
