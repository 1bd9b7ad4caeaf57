use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::posteriors::{standard_normal_log_density, Dense};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Observation {
    /// Outputs are logits of independent Bernoulli pixels.
    Bernoulli,
    /// Outputs are means of a Gaussian with fixed standard deviation.
    Gaussian { std: f64 },
}

/// Generative model with local latents: `z ~ N(0, I)`, `x ~ P(f(z))` with an
/// MLP `f` (ReLU hidden layers, linear output).
#[derive(Clone, Debug)]
pub struct Decoder {
    layers: Vec<Dense>,
    observation: Observation,
}

impl Decoder {
    pub fn new(latent: usize, hidden: &[usize], output: usize, observation: Observation, rng: &mut Rng) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut input = latent;
        for (i, &w) in hidden.iter().chain(core::iter::once(&output)).enumerate() {
            layers.push(Dense::new(&format!("dec{i}"), input, w, rng));
            input = w;
        }
        Self { layers, observation }
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").output_dim()
    }

    pub fn observation(&self) -> Observation {
        self.observation
    }

    /// Decoder outputs for latent rows `z`.
    pub fn forward(&self, tape: &Tape, z: &Tensor) -> Result<Tensor> {
        let mut h = z.clone();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            h = l.forward(tape, &h)?;
            if i < last {
                h = h.relu()?;
            }
        }
        Ok(h)
    }

    /// `log p(x_i | z)` where rows of `z` are grouped `per_point` to a row of `x`.
    pub fn log_likelihood(&self, tape: &Tape, z: &Tensor, x: &Matrix, per_point: usize) -> Result<Tensor> {
        let n = x.rows() * per_point;
        if z.shape() != [n, self.latent_dim()] {
            return Err(Error::ShapeMismatch {
                op: "decoder_log_likelihood",
                lhs: z.shape().to_vec(),
                rhs: alloc::vec![n, self.latent_dim()],
            });
        }
        if x.cols() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                found: x.cols(),
            });
        }
        let mut target = Vec::with_capacity(n * x.cols());
        for row in x.row_iter() {
            for _ in 0..per_point {
                target.extend_from_slice(row);
            }
        }
        let target = Tensor::new(target, [n, x.cols()])?;
        let out = self.forward(tape, z)?;
        let ll = match self.observation {
            Observation::Bernoulli => target.mul(&out)?.sub(&out.softplus()?)?,
            Observation::Gaussian { std } => {
                let c = -std.ln() - 0.5 * (2.0 * core::f64::consts::PI).ln();
                out.sub(&target)?.square()?.scale(-0.5 / (std * std))?.add_scalar(c)?
            }
        };
        ll.sum_axis(1)
    }

    /// `log p(z)` for every row.
    pub fn log_prior(&self, z: &Tensor) -> Result<Tensor> {
        standard_normal_log_density(z)
    }

    /// `n` datapoints from the generative process.
    pub fn generate(&self, n: usize, rng: &mut Rng) -> Result<Matrix> {
        let z = Tensor::randn([n, self.latent_dim()], rng);
        let out = self.forward(&Tape::new(), &z)?;
        let data = out
            .values()
            .iter()
            .map(|&v| match self.observation {
                Observation::Bernoulli => f64::from(u8::from(rng.uniform() < 1.0 / (1.0 + (-v).exp()))),
                Observation::Gaussian { std } => v + std * rng.normal(),
            })
            .collect();
        Matrix::from_vec(n, self.output_dim(), data)
    }
}

impl Parameterized for Decoder {
    fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }
}
