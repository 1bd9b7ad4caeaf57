use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::gaussian::MeanFieldGaussian;
use super::{ImplicitPosterior, Sample};
use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::Result;
use crate::rng::Rng;

/// `û = u + (m(wᵀu) − wᵀu) w / ‖w‖²` with `m(x) = −1 + softplus(x)`, which
/// keeps `wᵀû > −1` and so the planar map invertible. Returns `u` unchanged
/// when `w = 0`.
pub fn invertible_u(u: &Tensor, w: &Tensor) -> Result<Tensor> {
    let norm2 = w.square()?.sum()?;
    if norm2.item()? == 0.0 {
        return Ok(u.clone());
    }
    let wu = w.mul(u)?.sum()?;
    let m = wu.softplus()?.add_scalar(-1.0)?;
    u.add(&w.mul(&m.sub(&wu)?.div(&norm2)?)?)
}

fn preactivation(w: &Tensor, b: &Tensor, z: &Tensor) -> Result<Tensor> {
    let n = z.shape()[0];
    let d = w.numel();
    z.matmul(&w.reshape([d, 1])?)?.reshape([n])?.add(b)
}

/// `z + û tanh(wᵀz + b)` for rows of `z` (`[n, d]`).
pub fn planar_transform(u_hat: &Tensor, w: &Tensor, b: &Tensor, z: &Tensor) -> Result<Tensor> {
    let n = z.shape()[0];
    let d = w.numel();
    let h = preactivation(w, b, z)?.tanh()?;
    z.add(&h.reshape([n, 1])?.matmul(&u_hat.reshape([1, d])?)?)
}

/// `log |1 + ûᵀw (1 − tanh²(wᵀz + b))|` per row of `z`.
pub fn planar_log_det(u_hat: &Tensor, w: &Tensor, b: &Tensor, z: &Tensor) -> Result<Tensor> {
    let h = preactivation(w, b, z)?.tanh()?;
    let slope = h.square()?.neg()?.add_scalar(1.0)?;
    let wu = w.mul(u_hat)?.sum()?;
    slope.mul(&wu)?.add_scalar(1.0)?.ln()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanarLayer {
    pub u: Param,
    pub w: Param,
    pub b: Param,
}

impl PlanarLayer {
    pub fn new(index: usize, d: usize, rng: &mut Rng) -> Self {
        let small = |rng: &mut Rng| rng.normals(d).into_iter().map(|v| 0.1 * v).collect();
        Self {
            u: Param::new(format!("flow{index}.u"), [d], small(rng)).expect("sized"),
            w: Param::new(format!("flow{index}.w"), [d], small(rng)).expect("sized"),
            b: Param::zeros(format!("flow{index}.b"), [1]),
        }
    }

    /// Applies the layer and returns the transformed points with the log-det term.
    pub fn apply(&self, tape: &Tape, z: &Tensor) -> Result<(Tensor, Tensor)> {
        let (u, w, b) = (tape.param(&self.u), tape.param(&self.w), tape.param(&self.b));
        let u_hat = invertible_u(&u, &w)?;
        Ok((planar_transform(&u_hat, &w, &b, z)?, planar_log_det(&u_hat, &w, &b, z)?))
    }
}

/// Mean-field Gaussian base pushed through `K` planar layers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanarFlow {
    pub base: MeanFieldGaussian,
    pub layers: Vec<PlanarLayer>,
}

impl PlanarFlow {
    pub fn new(d: usize, k: usize, rng: &mut Rng) -> Self {
        Self {
            base: MeanFieldGaussian::new(d),
            layers: (0..k).map(|i| PlanarLayer::new(i, d, rng)).collect(),
        }
    }

    /// Flow applied to base draws `eps` (`[n, d]`).
    pub fn transform(&self, tape: &Tape, eps: &Tensor) -> Result<Sample> {
        let base = self.base.transform(tape, eps)?;
        let mut z = base.z;
        let mut log_q = base.log_density.expect("tractable base");
        for layer in &self.layers {
            let (next, log_det) = layer.apply(tape, &z)?;
            log_q = log_q.sub(&log_det)?;
            z = next;
        }
        Ok(Sample {
            z,
            log_density: Some(log_q),
        })
    }
}

impl ImplicitPosterior for PlanarFlow {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn sample(&self, tape: &Tape, n: usize, rng: &mut Rng) -> Result<Sample> {
        self.transform(tape, &Tensor::randn([n, self.dim()], rng))
    }
}

impl Parameterized for PlanarFlow {
    fn params(&self) -> Vec<&Param> {
        let mut out = self.base.params();
        out.extend(self.layers.iter().flat_map(|l| [&l.u, &l.w, &l.b]));
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = self.base.params_mut();
        out.extend(self.layers.iter_mut().flat_map(|l| [&mut l.u, &mut l.w, &mut l.b]));
        out
    }
}
