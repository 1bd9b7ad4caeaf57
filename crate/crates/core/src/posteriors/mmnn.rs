use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{ImplicitPosterior, Sample};
use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Parameter count of one layer mapping `m0 × n0` to `m × n`.
pub fn mmnn_parameter_count(m0: usize, n0: usize, m: usize, n: usize) -> usize {
    m * m0 + m * n0 + n0 * n + m * n
}

/// `X ← A_l X + B_l`, then `X ← X A_r + B_r`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MmnnLayer {
    /// `M_out × M_in`
    pub al: Param,
    /// `M_out × N_in`
    pub bl: Param,
    /// `N_in × N_out`
    pub ar: Param,
    /// `M_out × N_out`
    pub br: Param,
}

impl MmnnLayer {
    pub fn new(index: usize, input: (usize, usize), output: (usize, usize), rng: &mut Rng) -> Self {
        let ((mi, ni), (mo, no)) = (input, output);
        let init = |rows: usize, cols: usize, fan_in: usize, rng: &mut Rng| {
            let sd = 1.0 / (fan_in.max(1) as f64).sqrt();
            rng.normals(rows * cols).into_iter().map(|v| v * sd).collect()
        };
        Self {
            al: Param::new(format!("mm{index}.al"), [mo, mi], init(mo, mi, mi, rng)).expect("sized"),
            bl: Param::zeros(format!("mm{index}.bl"), [mo, ni]),
            ar: Param::new(format!("mm{index}.ar"), [ni, no], init(ni, no, ni, rng)).expect("sized"),
            br: Param::zeros(format!("mm{index}.br"), [mo, no]),
        }
    }

    pub fn input_shape(&self) -> (usize, usize) {
        (self.al.shape()[1], self.ar.shape()[0])
    }

    pub fn output_shape(&self) -> (usize, usize) {
        (self.al.shape()[0], self.ar.shape()[1])
    }

    fn consistent(&self) -> bool {
        let (mi, ni) = self.input_shape();
        let (mo, no) = self.output_shape();
        self.bl.shape() == [mo, ni] && self.br.shape() == [mo, no] && mi > 0 && ni > 0 && mo > 0 && no > 0
    }

    pub fn forward(&self, tape: &Tape, x: &Tensor) -> Result<Tensor> {
        let left = tape.param(&self.al).matmul(x)?.add(&tape.param(&self.bl))?;
        left.matmul(&tape.param(&self.ar))?.add(&tape.param(&self.br))
    }
}

/// Matrix-multiplication network: maps `M₀ × N₀` standard-normal matrices
/// to `M × N` matrices with ReLU between layers and a linear last layer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mmnn {
    input: (usize, usize),
    layers: Vec<MmnnLayer>,
}

impl Mmnn {
    /// Layers with the given output shapes, starting from `input`.
    pub fn new(input: (usize, usize), shapes: &[(usize, usize)], rng: &mut Rng) -> Result<Self> {
        let mut layers = Vec::with_capacity(shapes.len());
        let mut prev = input;
        for (i, &shape) in shapes.iter().enumerate() {
            layers.push(MmnnLayer::new(i, prev, shape, rng));
            prev = shape;
        }
        Self::from_layers(input, layers)
    }

    pub fn from_layers(input: (usize, usize), layers: Vec<MmnnLayer>) -> Result<Self> {
        if layers.is_empty() || input.0 == 0 || input.1 == 0 {
            return Err(Error::invalid("mmnn needs a non-empty input and at least one layer"));
        }
        let mut prev = input;
        for (i, l) in layers.iter().enumerate() {
            if !l.consistent() || l.input_shape() != prev {
                return Err(Error::invalid(format!(
                    "mmnn layer {i} expects {:?} but receives {prev:?}",
                    l.input_shape()
                )));
            }
            prev = l.output_shape();
        }
        Ok(Self { input, layers })
    }

    pub fn input_shape(&self) -> (usize, usize) {
        self.input
    }

    pub fn output_shape(&self) -> (usize, usize) {
        self.layers.last().expect("non-empty").output_shape()
    }

    pub fn layers(&self) -> &[MmnnLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [MmnnLayer] {
        &mut self.layers
    }

    /// Sum of [`mmnn_parameter_count`] over the chain.
    pub fn expected_parameter_count(&self) -> usize {
        let mut prev = self.input;
        let mut total = 0;
        for l in &self.layers {
            let out = l.output_shape();
            total += mmnn_parameter_count(prev.0, prev.1, out.0, out.1);
            prev = out;
        }
        total
    }

    /// `x` is `[n, M₀, N₀]` (or a single `[M₀, N₀]` matrix); the result has
    /// the matching `[n, M, N]` or `[M, N]` shape.
    pub fn forward(&self, tape: &Tape, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            h = l.forward(tape, &h)?;
            if i < last {
                h = h.relu()?;
            }
        }
        Ok(h)
    }
}

impl ImplicitPosterior for Mmnn {
    fn dim(&self) -> usize {
        let (m, n) = self.output_shape();
        m * n
    }

    fn sample(&self, tape: &Tape, n: usize, rng: &mut Rng) -> Result<Sample> {
        let (m0, n0) = self.input;
        let x = Tensor::randn([n, m0, n0], rng);
        let out = self.forward(tape, &x)?;
        Ok(Sample::implicit(out.reshape([n, self.dim()])?))
    }
}

impl Parameterized for Mmnn {
    fn params(&self) -> Vec<&Param> {
        self.layers
            .iter()
            .flat_map(|l| [&l.al, &l.bl, &l.ar, &l.br])
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.al, &mut l.bl, &mut l.ar, &mut l.br])
            .collect()
    }
}
