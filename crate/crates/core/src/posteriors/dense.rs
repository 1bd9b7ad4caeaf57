use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::Result;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, x: &Tensor) -> Result<Tensor> {
        match self {
            Activation::Relu => x.relu(),
            Activation::Tanh => x.tanh(),
            Activation::Identity => Ok(x.clone()),
        }
    }
}

/// Affine map `x W + b` on `[n, in]` inputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
}

impl Dense {
    /// Weights drawn from `N(0, 1/in)`, zero bias.
    pub fn new(name: &str, input: usize, output: usize, rng: &mut Rng) -> Self {
        let sd = 1.0 / (input.max(1) as f64).sqrt();
        let w = rng.normals(input * output).into_iter().map(|v| v * sd).collect();
        Self {
            weight: Param::new(format!("{name}.weight"), [input, output], w).expect("sized"),
            bias: Param::zeros(format!("{name}.bias"), [output]),
        }
    }

    pub fn zeros(name: &str, input: usize, output: usize) -> Self {
        Self {
            weight: Param::zeros(format!("{name}.weight"), [input, output]),
            bias: Param::zeros(format!("{name}.bias"), [output]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&self, tape: &Tape, x: &Tensor) -> Result<Tensor> {
        x.matmul(&tape.param(&self.weight))?.add(&tape.param(&self.bias))
    }
}

impl Parameterized for Dense {
    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}
