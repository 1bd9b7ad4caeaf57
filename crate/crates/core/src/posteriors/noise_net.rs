use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::dense::{Activation, Dense};
use super::{ImplicitPosterior, Sample};
use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    #[serde(default)]
    pub activation: Activation,
}

/// Architecture of a [`NoiseNet`]. The final layer's width is the sample
/// dimensionality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseNetSpec {
    /// Width of the standard-normal input.
    pub noise_dim: usize,
    pub layers: Vec<LayerSpec>,
    /// Index of the layer whose (activated) output receives additive
    /// Gaussian noise with trainable per-unit log-variances.
    #[serde(default)]
    pub inject_after: Option<usize>,
}

impl NoiseNetSpec {
    /// `hidden` layers with `activation`, then a linear output of width `output`.
    pub fn mlp(noise_dim: usize, hidden: &[usize], output: usize, activation: Activation) -> Self {
        let mut layers: Vec<LayerSpec> = hidden
            .iter()
            .map(|&width| LayerSpec { width, activation })
            .collect();
        layers.push(LayerSpec {
            width: output,
            activation: Activation::Identity,
        });
        Self {
            noise_dim,
            layers,
            inject_after: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() || self.layers.iter().any(|l| l.width == 0) {
            return Err(Error::invalid("noise net needs at least one non-empty layer"));
        }
        if let Some(k) = self.inject_after {
            if k >= self.layers.len() {
                return Err(Error::invalid(format!(
                    "noise injection after layer {k} but the net has {} layers",
                    self.layers.len()
                )));
            }
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.width)
    }
}

/// Implicit posterior: standard-normal noise pushed through an MLP, with
/// optional extra Gaussian noise part-way through.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseNet {
    spec: NoiseNetSpec,
    layers: Vec<Dense>,
    /// Per-unit log-variance of the mid-network noise.
    log_var: Option<Param>,
}

impl NoiseNet {
    pub fn new(spec: NoiseNetSpec, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        let mut layers = Vec::with_capacity(spec.layers.len());
        let mut input = spec.noise_dim;
        for (i, l) in spec.layers.iter().enumerate() {
            layers.push(Dense::new(&format!("layer{i}"), input, l.width, rng));
            input = l.width;
        }
        let log_var = spec
            .inject_after
            .map(|k| Param::zeros("noise.log_var", [spec.layers[k].width]));
        Ok(Self { spec, layers, log_var })
    }

    pub fn spec(&self) -> &NoiseNetSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn mid_noise_log_var(&self) -> Option<&Param> {
        self.log_var.as_ref()
    }

    /// Width of the mid-network noise, if any.
    pub fn mid_noise_dim(&self) -> Option<usize> {
        self.spec.inject_after.map(|k| self.spec.layers[k].width)
    }

    /// Pushes `input` (`[n, noise_dim]`) through the net. `mid_noise` is the
    /// standard-normal draw for the injection site; `None` injects nothing.
    pub fn forward(&self, tape: &Tape, input: &Tensor, mid_noise: Option<&Tensor>) -> Result<Tensor> {
        let mut h = input.clone();
        for (i, (layer, spec)) in self.layers.iter().zip(&self.spec.layers).enumerate() {
            h = spec.activation.apply(&layer.forward(tape, &h)?)?;
            if self.spec.inject_after == Some(i) {
                if let (Some(eps), Some(lv)) = (mid_noise, &self.log_var) {
                    let std = tape.param(lv).scale(0.5)?.exp()?;
                    h = h.add(&eps.detach().mul(&std)?)?;
                }
            }
        }
        Ok(h)
    }
}

impl ImplicitPosterior for NoiseNet {
    fn dim(&self) -> usize {
        self.spec.output_dim()
    }

    fn sample(&self, tape: &Tape, n: usize, rng: &mut Rng) -> Result<Sample> {
        let input = Tensor::randn([n, self.spec.noise_dim], rng);
        let mid = self.mid_noise_dim().map(|w| Tensor::randn([n, w], rng));
        Ok(Sample::implicit(self.forward(tape, &input, mid.as_ref())?))
    }
}

impl Parameterized for NoiseNet {
    fn params(&self) -> Vec<&Param> {
        let mut out: Vec<&Param> = self.layers.iter().flat_map(|l| l.params()).collect();
        out.extend(self.log_var.as_ref());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = self.layers.iter_mut().flat_map(|l| l.params_mut()).collect();
        out.extend(self.log_var.as_mut());
        out
    }
}
