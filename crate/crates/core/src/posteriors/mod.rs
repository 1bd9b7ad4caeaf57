//! Variational posterior families.
//!
//! Every family draws reparameterized samples on a caller-supplied tape, so
//! gradients of anything computed from the samples reach the family's
//! parameters. Tractable families also report the log-density of each draw.

mod amortized;
mod composite;
mod dense;
mod flow;
mod gaussian;
mod mmnn;
mod noise_net;

use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Parameterized, Tape, Tensor};
use crate::error::Result;
use crate::rng::Rng;

pub use amortized::{AmortizedGaussian, AmortizedNoiseNet, AmortizedPosterior};
pub use composite::ConcatPosterior;
pub use dense::{Activation, Dense};
pub use flow::{invertible_u, planar_log_det, planar_transform, PlanarFlow, PlanarLayer};
pub use gaussian::{standard_normal_log_density, MeanFieldGaussian};
pub use mmnn::{mmnn_parameter_count, Mmnn, MmnnLayer};
pub use noise_net::{LayerSpec, NoiseNet, NoiseNetSpec};

/// A batch of posterior draws.
#[derive(Clone, Debug)]
pub struct Sample {
    /// `[n, d]`, attached to the sampling tape.
    pub z: Tensor,
    /// `[n]`, only for families with a tractable density.
    pub log_density: Option<Tensor>,
}

impl Sample {
    pub fn implicit(z: Tensor) -> Self {
        Self { z, log_density: None }
    }
}

pub trait ImplicitPosterior: Parameterized {
    fn dim(&self) -> usize;

    fn sample(&self, tape: &Tape, n: usize, rng: &mut Rng) -> Result<Sample>;

    /// Widths of independently parameterized blocks of `z`, in column order.
    fn blocks(&self) -> Vec<usize> {
        vec![self.dim()]
    }
}

impl<P: ImplicitPosterior + ?Sized> ImplicitPosterior for alloc::boxed::Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn sample(&self, tape: &Tape, n: usize, rng: &mut Rng) -> Result<Sample> {
        (**self).sample(tape, n, rng)
    }

    fn blocks(&self) -> Vec<usize> {
        (**self).blocks()
    }
}

#[cfg(test)]
mod tests;
