use alloc::boxed::Box;
use alloc::vec::Vec;

use super::{ImplicitPosterior, Sample};
use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Independent posteriors over consecutive column blocks of `z`, e.g. one
/// per weight matrix of a network. Samples are concatenated column-wise.
pub struct ConcatPosterior {
    parts: Vec<Box<dyn ImplicitPosterior>>,
}

impl ConcatPosterior {
    pub fn new(parts: Vec<Box<dyn ImplicitPosterior>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("concatenated posterior needs at least one part"));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[Box<dyn ImplicitPosterior>] {
        &self.parts
    }
}

impl ImplicitPosterior for ConcatPosterior {
    fn dim(&self) -> usize {
        self.parts.iter().map(|p| p.dim()).sum()
    }

    fn sample(&self, tape: &Tape, n: usize, rng: &mut Rng) -> Result<Sample> {
        let draws = self
            .parts
            .iter()
            .map(|p| p.sample(tape, n, rng))
            .collect::<Result<Vec<_>>>()?;
        let zs: Vec<&Tensor> = draws.iter().map(|s| &s.z).collect();
        let z = Tensor::concat(&zs, 1)?;
        let mut log_density = None;
        if draws.iter().all(|s| s.log_density.is_some()) {
            let mut acc = Tensor::zeros([n]);
            for s in &draws {
                acc = acc.add(s.log_density.as_ref().expect("checked"))?;
            }
            log_density = Some(acc);
        }
        Ok(Sample { z, log_density })
    }

    fn blocks(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.dim()).collect()
    }
}

impl Parameterized for ConcatPosterior {
    fn params(&self) -> Vec<&Param> {
        self.parts.iter().flat_map(|p| p.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.parts.iter_mut().flat_map(|p| p.params_mut()).collect()
    }
}
