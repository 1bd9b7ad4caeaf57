use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::dense::{Activation, Dense};
use super::gaussian::standard_normal_log_density;
use super::noise_net::{NoiseNet, NoiseNetSpec};
use super::Sample;
use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;

/// Posterior over per-datapoint latents `q(z | x)`.
pub trait AmortizedPosterior: Parameterized {
    fn latent_dim(&self) -> usize;

    fn input_dim(&self) -> usize;

    /// `per_point` draws for every row of `x`, returned as
    /// `[rows · per_point, d]` with the draws of row `i` contiguous.
    fn sample_given(&self, tape: &Tape, x: &Matrix, per_point: usize, rng: &mut Rng) -> Result<Sample>;
}

/// Each row of `x` repeated `times` times.
fn repeat_rows(x: &Matrix, times: usize) -> Tensor {
    let mut data = Vec::with_capacity(x.rows() * times * x.cols());
    for row in x.row_iter() {
        for _ in 0..times {
            data.extend_from_slice(row);
        }
    }
    Tensor::new(data, [x.rows() * times, x.cols()]).expect("sized")
}

fn check_input(x: &Matrix, expected: usize, per_point: usize) -> Result<()> {
    if x.cols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.cols(),
        });
    }
    if per_point == 0 || x.rows() == 0 {
        return Err(Error::EmptySamples);
    }
    Ok(())
}

/// Implicit encoder: `x`, optionally concatenated with input noise, through
/// a [`NoiseNet`] whose hidden layer receives Gaussian noise.
#[derive(Clone, Debug)]
pub struct AmortizedNoiseNet {
    x_dim: usize,
    input_noise: usize,
    net: NoiseNet,
}

impl AmortizedNoiseNet {
    /// `spec.noise_dim` must equal `x_dim + input_noise`.
    pub fn new(x_dim: usize, input_noise: usize, spec: NoiseNetSpec, rng: &mut Rng) -> Result<Self> {
        if spec.noise_dim != x_dim + input_noise {
            return Err(Error::DimensionMismatch {
                expected: x_dim + input_noise,
                found: spec.noise_dim,
            });
        }
        if input_noise == 0 && spec.inject_after.is_none() {
            return Err(Error::invalid("amortized noise net needs a noise source"));
        }
        Ok(Self {
            x_dim,
            input_noise,
            net: NoiseNet::new(spec, rng)?,
        })
    }

    pub fn net(&self) -> &NoiseNet {
        &self.net
    }
}

impl AmortizedPosterior for AmortizedNoiseNet {
    fn latent_dim(&self) -> usize {
        self.net.spec().output_dim()
    }

    fn input_dim(&self) -> usize {
        self.x_dim
    }

    fn sample_given(&self, tape: &Tape, x: &Matrix, per_point: usize, rng: &mut Rng) -> Result<Sample> {
        check_input(x, self.x_dim, per_point)?;
        let n = x.rows() * per_point;
        let mut input = repeat_rows(x, per_point);
        if self.input_noise > 0 {
            input = Tensor::concat(&[&input, &Tensor::randn([n, self.input_noise], rng)], 1)?;
        }
        let mid = self.net.mid_noise_dim().map(|w| Tensor::randn([n, w], rng));
        Ok(Sample::implicit(self.net.forward(tape, &input, mid.as_ref())?))
    }
}

impl Parameterized for AmortizedNoiseNet {
    fn params(&self) -> Vec<&Param> {
        self.net.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.net.params_mut()
    }
}

/// Gaussian encoder `q(z | x) = N(μ(x), diag σ(x)²)` with a shared MLP trunk.
#[derive(Clone, Debug)]
pub struct AmortizedGaussian {
    trunk: Vec<Dense>,
    activation: Activation,
    mean: Dense,
    log_std: Dense,
}

impl AmortizedGaussian {
    pub fn new(x_dim: usize, hidden: &[usize], latent: usize, activation: Activation, rng: &mut Rng) -> Self {
        let mut trunk = Vec::with_capacity(hidden.len());
        let mut input = x_dim;
        for (i, &w) in hidden.iter().enumerate() {
            trunk.push(Dense::new(&alloc::format!("enc{i}"), input, w, rng));
            input = w;
        }
        Self {
            trunk,
            activation,
            mean: Dense::new("enc.mean", input, latent, rng),
            log_std: Dense::zeros("enc.log_std", input, latent),
        }
    }

    /// Per-row mean and log-std of `q(z | x)`.
    pub fn moments(&self, tape: &Tape, x: &Tensor) -> Result<(Tensor, Tensor)> {
        let mut h = x.clone();
        for layer in &self.trunk {
            h = self.activation.apply(&layer.forward(tape, &h)?)?;
        }
        Ok((self.mean.forward(tape, &h)?, self.log_std.forward(tape, &h)?))
    }

    pub fn head_mut(&mut self) -> (&mut Dense, &mut Dense) {
        (&mut self.mean, &mut self.log_std)
    }
}

impl AmortizedPosterior for AmortizedGaussian {
    fn latent_dim(&self) -> usize {
        self.mean.output_dim()
    }

    fn input_dim(&self) -> usize {
        self.trunk.first().unwrap_or(&self.mean).input_dim()
    }

    fn sample_given(&self, tape: &Tape, x: &Matrix, per_point: usize, rng: &mut Rng) -> Result<Sample> {
        check_input(x, self.input_dim(), per_point)?;
        let n = x.rows() * per_point;
        let (mean, log_std) = self.moments(tape, &repeat_rows(x, per_point))?;
        let eps = Tensor::randn([n, self.latent_dim()], rng);
        let z = eps.mul(&log_std.exp()?)?.add(&mean)?;
        let log_density = standard_normal_log_density(&eps)?.sub(&log_std.sum_axis(1)?)?;
        Ok(Sample {
            z,
            log_density: Some(log_density),
        })
    }
}

impl Parameterized for AmortizedGaussian {
    fn params(&self) -> Vec<&Param> {
        let mut out: Vec<&Param> = self.trunk.iter().flat_map(|l| l.params()).collect();
        out.extend(self.mean.params());
        out.extend(self.log_std.params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = self.trunk.iter_mut().flat_map(|l| l.params_mut()).collect();
        out.extend(self.mean.params_mut());
        out.extend(self.log_std.params_mut());
        out
    }
}

