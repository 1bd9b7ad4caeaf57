//! Forward evaluation and adjoints for every differentiable operation.
//!
//! Broadcasting is restricted to two cases: one operand holds a single
//! element, or its shape is a suffix of the other operand's shape (repeat
//! over leading axes). In both cases element `i` of the larger operand pairs
//! with element `i % len` of the smaller, which keeps the adjoints trivial.

use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::tape::Tape;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::special;

pub(crate) struct Operand {
    node: Option<usize>,
    value: Rc<[f64]>,
}

impl Operand {
    fn of(t: &Tensor) -> Self {
        Self {
            node: t.node.as_ref().map(|n| n.id),
            value: t.data.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Unary {
    Neg,
    Exp,
    Ln,
    Square,
    Sqrt,
    Relu,
    Tanh,
    Sigmoid,
    Softplus,
    ClampMin(f64),
    Digamma,
    LnGamma,
    Scale(f64),
    Offset(f64),
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Binary {
    Add,
    Sub,
    Mul,
    Div,
}

pub(crate) enum Op {
    Leaf,
    Unary {
        kind: Unary,
        input: Operand,
    },
    Binary {
        kind: Binary,
        lhs: Operand,
        rhs: Operand,
    },
    Matmul {
        lhs: Operand,
        rhs: Operand,
        dims: MatmulDims,
    },
    Sum {
        input: Operand,
    },
    SumAxis {
        input: Operand,
        outer: usize,
        len: usize,
        inner: usize,
    },
    Reshape {
        input: Operand,
    },
    Transpose {
        input: Operand,
        rows: usize,
        cols: usize,
    },
    Concat {
        inputs: Vec<(Operand, usize)>,
        outer: usize,
        inner: usize,
    },
    Narrow {
        input: Operand,
        outer: usize,
        len: usize,
        inner: usize,
        start: usize,
        width: usize,
    },
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct MatmulDims {
    batch: usize,
    n: usize,
    k: usize,
    m: usize,
    lhs_batched: bool,
    rhs_batched: bool,
}

fn common_tape(ts: &[&Tensor]) -> Result<Option<Tape>> {
    let mut tape: Option<&Tape> = None;
    for t in ts {
        if let Some(n) = &t.node {
            match tape {
                None => tape = Some(&n.tape),
                Some(existing) if existing.same(&n.tape) => {}
                Some(_) => return Err(Error::TapeMismatch),
            }
        }
    }
    Ok(tape.cloned())
}

fn finish(
    inputs: &[&Tensor],
    shape: Vec<usize>,
    value: Vec<f64>,
    name: &'static str,
    op: impl FnOnce() -> Op,
) -> Result<Tensor> {
    match common_tape(inputs)? {
        Some(tape) => tape.push(op(), shape, value, name),
        None => Tensor::new(value, shape),
    }
}

fn broadcast_shape(name: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let na: usize = a.iter().product();
    let nb: usize = b.iter().product();
    if a == b {
        return Ok(a.to_vec());
    }
    if nb == 1 && (na != 1 || a.len() >= b.len()) {
        return Ok(a.to_vec());
    }
    if na == 1 {
        return Ok(b.to_vec());
    }
    if b.len() < a.len() && a.ends_with(b) {
        return Ok(a.to_vec());
    }
    if a.len() < b.len() && b.ends_with(a) {
        return Ok(b.to_vec());
    }
    Err(Error::ShapeMismatch {
        op: name,
        lhs: a.to_vec(),
        rhs: b.to_vec(),
    })
}

fn split_axis(name: &'static str, shape: &[usize], axis: usize) -> Result<(usize, usize, usize)> {
    if axis >= shape.len() {
        return Err(Error::ShapeMismatch {
            op: name,
            lhs: shape.to_vec(),
            rhs: vec![axis],
        });
    }
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    Ok((outer, shape[axis], inner))
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tensor {
    fn unary(&self, kind: Unary, name: &'static str) -> Result<Tensor> {
        let x = &self.data;
        let value: Vec<f64> = match kind {
            Unary::Neg => x.iter().map(|v| -v).collect(),
            Unary::Exp => x.iter().map(|v| v.exp()).collect(),
            Unary::Ln => {
                if let Some(bad) = x.iter().find(|v| !(**v > 0.0)) {
                    return Err(Error::domain("ln", alloc::format!("non-positive argument {bad}")));
                }
                x.iter().map(|v| v.ln()).collect()
            }
            Unary::Square => x.iter().map(|v| v * v).collect(),
            Unary::Sqrt => {
                if let Some(bad) = x.iter().find(|v| !(**v >= 0.0)) {
                    return Err(Error::domain("sqrt", alloc::format!("negative argument {bad}")));
                }
                x.iter().map(|v| v.sqrt()).collect()
            }
            Unary::Relu => x.iter().map(|v| v.max(0.0)).collect(),
            Unary::Tanh => x.iter().map(|v| v.tanh()).collect(),
            Unary::Sigmoid => x.iter().map(|&v| sigmoid(v)).collect(),
            Unary::Softplus => x.iter().map(|&v| softplus(v)).collect(),
            Unary::ClampMin(c) => x.iter().map(|v| v.max(c)).collect(),
            Unary::Digamma => x.iter().map(|&v| special::digamma(v)).collect::<Result<_>>()?,
            Unary::LnGamma => x.iter().map(|&v| special::ln_gamma(v)).collect::<Result<_>>()?,
            Unary::Scale(s) => x.iter().map(|v| v * s).collect(),
            Unary::Offset(s) => x.iter().map(|v| v + s).collect(),
        };
        finish(&[self], self.shape.clone(), value, name, || Op::Unary {
            kind,
            input: Operand::of(self),
        })
    }

    pub fn neg(&self) -> Result<Tensor> {
        self.unary(Unary::Neg, "neg")
    }

    pub fn exp(&self) -> Result<Tensor> {
        self.unary(Unary::Exp, "exp")
    }

    /// Natural logarithm; errors on non-positive entries.
    pub fn ln(&self) -> Result<Tensor> {
        self.unary(Unary::Ln, "ln")
    }

    pub fn square(&self) -> Result<Tensor> {
        self.unary(Unary::Square, "square")
    }

    pub fn sqrt(&self) -> Result<Tensor> {
        self.unary(Unary::Sqrt, "sqrt")
    }

    pub fn relu(&self) -> Result<Tensor> {
        self.unary(Unary::Relu, "relu")
    }

    pub fn tanh(&self) -> Result<Tensor> {
        self.unary(Unary::Tanh, "tanh")
    }

    pub fn sigmoid(&self) -> Result<Tensor> {
        self.unary(Unary::Sigmoid, "sigmoid")
    }

    pub fn softplus(&self) -> Result<Tensor> {
        self.unary(Unary::Softplus, "softplus")
    }

    /// `max(x, floor)` elementwise; the gradient passes only where `x > floor`.
    pub fn clamp_min(&self, floor: f64) -> Result<Tensor> {
        self.unary(Unary::ClampMin(floor), "clamp_min")
    }

    pub fn digamma(&self) -> Result<Tensor> {
        self.unary(Unary::Digamma, "digamma")
    }

    pub fn ln_gamma(&self) -> Result<Tensor> {
        self.unary(Unary::LnGamma, "ln_gamma")
    }

    pub fn scale(&self, s: f64) -> Result<Tensor> {
        self.unary(Unary::Scale(s), "scale")
    }

    pub fn add_scalar(&self, s: f64) -> Result<Tensor> {
        self.unary(Unary::Offset(s), "add_scalar")
    }

    fn binary(&self, rhs: &Tensor, kind: Binary, name: &'static str) -> Result<Tensor> {
        let shape = broadcast_shape(name, &self.shape, &rhs.shape)?;
        let n: usize = shape.iter().product();
        let (a, b) = (&self.data, &rhs.data);
        let (na, nb) = (a.len(), b.len());
        if let Binary::Div = kind {
            if b.contains(&0.0) {
                return Err(Error::domain("div", "division by zero"));
            }
        }
        let f = |i: usize| {
            let (x, y) = (a[i % na], b[i % nb]);
            match kind {
                Binary::Add => x + y,
                Binary::Sub => x - y,
                Binary::Mul => x * y,
                Binary::Div => x / y,
            }
        };
        let value: Vec<f64> = (0..n).map(f).collect();
        finish(&[self, rhs], shape, value, name, || Op::Binary {
            kind,
            lhs: Operand::of(self),
            rhs: Operand::of(rhs),
        })
    }

    pub fn add(&self, rhs: &Tensor) -> Result<Tensor> {
        self.binary(rhs, Binary::Add, "add")
    }

    pub fn sub(&self, rhs: &Tensor) -> Result<Tensor> {
        self.binary(rhs, Binary::Sub, "sub")
    }

    pub fn mul(&self, rhs: &Tensor) -> Result<Tensor> {
        self.binary(rhs, Binary::Mul, "mul")
    }

    /// Elementwise division; errors if any divisor is exactly zero.
    pub fn div(&self, rhs: &Tensor) -> Result<Tensor> {
        self.binary(rhs, Binary::Div, "div")
    }

    /// Matrix product over the last two axes. Rank-2 and rank-3 operands
    /// are accepted; a rank-2 operand is shared across the other's batch.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        let mismatch = || Error::ShapeMismatch {
            op: "matmul",
            lhs: self.shape.clone(),
            rhs: rhs.shape.clone(),
        };
        let (lb, n, k) = match self.shape[..] {
            [n, k] => (None, n, k),
            [b, n, k] => (Some(b), n, k),
            _ => return Err(mismatch()),
        };
        let (rb, k2, m) = match rhs.shape[..] {
            [k, m] => (None, k, m),
            [b, k, m] => (Some(b), k, m),
            _ => return Err(mismatch()),
        };
        if k != k2 {
            return Err(mismatch());
        }
        let batch = match (lb, rb) {
            (Some(a), Some(b)) if a != b => return Err(mismatch()),
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => 1,
        };
        let dims = MatmulDims {
            batch,
            n,
            k,
            m,
            lhs_batched: lb.is_some(),
            rhs_batched: rb.is_some(),
        };
        let mut out = vec![0.0; batch * n * m];
        for s in 0..batch {
            let a = &self.data[if dims.lhs_batched { s * n * k } else { 0 }..][..n * k];
            let b = &rhs.data[if dims.rhs_batched { s * k * m } else { 0 }..][..k * m];
            let c = &mut out[s * n * m..(s + 1) * n * m];
            for i in 0..n {
                let crow = &mut c[i * m..(i + 1) * m];
                for kk in 0..k {
                    let aik = a[i * k + kk];
                    if aik == 0.0 {
                        continue;
                    }
                    for (cv, bv) in crow.iter_mut().zip(&b[kk * m..(kk + 1) * m]) {
                        *cv += aik * bv;
                    }
                }
            }
        }
        let shape = if lb.is_none() && rb.is_none() {
            vec![n, m]
        } else {
            vec![batch, n, m]
        };
        finish(&[self, rhs], shape, out, "matmul", || Op::Matmul {
            lhs: Operand::of(self),
            rhs: Operand::of(rhs),
            dims,
        })
    }

    /// Sum of all entries, as a rank-0 tensor.
    pub fn sum(&self) -> Result<Tensor> {
        let total = self.data.iter().sum();
        finish(&[self], Vec::new(), vec![total], "sum", || Op::Sum {
            input: Operand::of(self),
        })
    }

    pub fn mean(&self) -> Result<Tensor> {
        let n = self.numel();
        if n == 0 {
            return Err(Error::EmptySamples);
        }
        self.sum()?.scale(1.0 / n as f64)
    }

    /// Sum over one axis, removing it.
    pub fn sum_axis(&self, axis: usize) -> Result<Tensor> {
        let (outer, len, inner) = split_axis("sum_axis", &self.shape, axis)?;
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for l in 0..len {
                let src = &self.data[(o * len + l) * inner..][..inner];
                for (d, s) in out[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
        let mut shape = self.shape.clone();
        shape.remove(axis);
        finish(&[self], shape, out, "sum_axis", || Op::SumAxis {
            input: Operand::of(self),
            outer,
            len,
            inner,
        })
    }

    pub fn mean_axis(&self, axis: usize) -> Result<Tensor> {
        let len = *self.shape.get(axis).ok_or_else(|| Error::ShapeMismatch {
            op: "mean_axis",
            lhs: self.shape.clone(),
            rhs: vec![axis],
        })?;
        if len == 0 {
            return Err(Error::EmptySamples);
        }
        self.sum_axis(axis)?.scale(1.0 / len as f64)
    }

    pub fn reshape(&self, shape: impl Into<Vec<usize>>) -> Result<Tensor> {
        let shape = shape.into();
        if shape.iter().product::<usize>() != self.numel() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                lhs: self.shape.clone(),
                rhs: shape,
            });
        }
        finish(&[self], shape, self.data.to_vec(), "reshape", || Op::Reshape {
            input: Operand::of(self),
        })
    }

    /// Transpose of a rank-2 tensor.
    pub fn t(&self) -> Result<Tensor> {
        let [rows, cols] = self.shape[..] else {
            return Err(Error::ShapeMismatch {
                op: "transpose",
                lhs: self.shape.clone(),
                rhs: vec![0, 0],
            });
        };
        let mut out = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                out[j * rows + i] = self.data[i * cols + j];
            }
        }
        finish(&[self], vec![cols, rows], out, "transpose", || Op::Transpose {
            input: Operand::of(self),
            rows,
            cols,
        })
    }

    /// Concatenate along `axis`; all other extents must agree.
    pub fn concat(parts: &[&Tensor], axis: usize) -> Result<Tensor> {
        let first = parts.first().ok_or(Error::EmptySamples)?;
        let (outer, _, inner) = split_axis("concat", &first.shape, axis)?;
        let mut total = 0;
        for p in parts {
            let same_rank = p.shape.len() == first.shape.len();
            let others_agree = same_rank
                && p.shape
                    .iter()
                    .zip(&first.shape)
                    .enumerate()
                    .all(|(i, (a, b))| i == axis || a == b);
            if !others_agree {
                return Err(Error::ShapeMismatch {
                    op: "concat",
                    lhs: first.shape.clone(),
                    rhs: p.shape.clone(),
                });
            }
            total += p.shape[axis];
        }
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for p in parts {
                let w = p.shape[axis] * inner;
                out.extend_from_slice(&p.data[o * w..(o + 1) * w]);
            }
        }
        let mut shape = first.shape.clone();
        shape[axis] = total;
        finish(parts, shape, out, "concat", || Op::Concat {
            inputs: parts.iter().map(|p| (Operand::of(p), p.shape[axis])).collect(),
            outer,
            inner,
        })
    }

    /// `width` consecutive entries along `axis`, starting at `start`.
    pub fn narrow(&self, axis: usize, start: usize, width: usize) -> Result<Tensor> {
        let (outer, len, inner) = split_axis("narrow", &self.shape, axis)?;
        if start + width > len {
            return Err(Error::ShapeMismatch {
                op: "narrow",
                lhs: self.shape.clone(),
                rhs: vec![start, width],
            });
        }
        let mut out = Vec::with_capacity(outer * width * inner);
        for o in 0..outer {
            out.extend_from_slice(&self.data[(o * len + start) * inner..][..width * inner]);
        }
        let mut shape = self.shape.clone();
        shape[axis] = width;
        finish(&[self], shape, out, "narrow", || Op::Narrow {
            input: Operand::of(self),
            outer,
            len,
            inner,
            start,
            width,
        })
    }
}

/// `mean + std * eps`, differentiable in `mean` and `std`; `eps` is a constant.
pub fn reparameterize(mean: &Tensor, std: &Tensor, eps: &Tensor) -> Result<Tensor> {
    std.mul(&eps.detach())?.add(mean)
}

/// Draw `mean + std * ε`, ε ~ N(0, I) of the given shape, via the
/// reparameterization trick. `mean` and `std` broadcast against `shape`.
pub fn gaussian_sample(mean: &Tensor, std: &Tensor, shape: &[usize], rng: &mut Rng) -> Result<Tensor> {
    if let Some(bad) = std.values().iter().find(|s| !(**s > 0.0)) {
        return Err(Error::domain("gaussian_sample", alloc::format!("std must be positive, got {bad}")));
    }
    let eps = Tensor::randn(shape.to_vec(), rng);
    let out = reparameterize(mean, std, &eps)?;
    if out.shape() != shape {
        return Err(Error::ShapeMismatch {
            op: "gaussian_sample",
            lhs: out.shape().to_vec(),
            rhs: shape.to_vec(),
        });
    }
    Ok(out)
}

pub(crate) fn backward_op(op: &Op, out: &[f64], g: &[f64], emit: &mut dyn FnMut(usize, Vec<f64>)) {
    match op {
        Op::Leaf => {}
        Op::Unary { kind, input } => {
            let Some(id) = input.node else { return };
            let x = &input.value;
            let grad = (0..g.len())
                .map(|i| {
                    let local = match *kind {
                        Unary::Neg => -1.0,
                        Unary::Exp => out[i],
                        Unary::Ln => 1.0 / x[i],
                        Unary::Square => 2.0 * x[i],
                        Unary::Sqrt => 0.5 / out[i],
                        Unary::Relu => f64::from(u8::from(x[i] > 0.0)),
                        Unary::Tanh => 1.0 - out[i] * out[i],
                        Unary::Sigmoid => out[i] * (1.0 - out[i]),
                        Unary::Softplus => sigmoid(x[i]),
                        Unary::ClampMin(c) => f64::from(u8::from(x[i] > c)),
                        Unary::Digamma => special::trigamma(x[i]).unwrap_or(f64::NAN),
                        Unary::LnGamma => special::digamma(x[i]).unwrap_or(f64::NAN),
                        Unary::Scale(s) => s,
                        Unary::Offset(_) => 1.0,
                    };
                    g[i] * local
                })
                .collect();
            emit(id, grad);
        }
        Op::Binary { kind, lhs, rhs } => {
            let (a, b) = (&lhs.value, &rhs.value);
            let (na, nb) = (a.len(), b.len());
            if let Some(id) = lhs.node {
                let mut ga = vec![0.0; na];
                for (i, gi) in g.iter().enumerate() {
                    let local = match kind {
                        Binary::Add | Binary::Sub => 1.0,
                        Binary::Mul => b[i % nb],
                        Binary::Div => 1.0 / b[i % nb],
                    };
                    ga[i % na] += gi * local;
                }
                emit(id, ga);
            }
            if let Some(id) = rhs.node {
                let mut gb = vec![0.0; nb];
                for (i, gi) in g.iter().enumerate() {
                    let local = match kind {
                        Binary::Add => 1.0,
                        Binary::Sub => -1.0,
                        Binary::Mul => a[i % na],
                        Binary::Div => {
                            let y = b[i % nb];
                            -a[i % na] / (y * y)
                        }
                    };
                    gb[i % nb] += gi * local;
                }
                emit(id, gb);
            }
        }
        Op::Matmul { lhs, rhs, dims } => {
            let MatmulDims {
                batch,
                n,
                k,
                m,
                lhs_batched,
                rhs_batched,
            } = *dims;
            let a_off = |s: usize| if lhs_batched { s * n * k } else { 0 };
            let b_off = |s: usize| if rhs_batched { s * k * m } else { 0 };
            if let Some(id) = lhs.node {
                let mut ga = vec![0.0; lhs.value.len()];
                for s in 0..batch {
                    let b = &rhs.value[b_off(s)..][..k * m];
                    let gs = &g[s * n * m..][..n * m];
                    let dst = &mut ga[a_off(s)..][..n * k];
                    for i in 0..n {
                        let grow = &gs[i * m..(i + 1) * m];
                        for kk in 0..k {
                            let brow = &b[kk * m..(kk + 1) * m];
                            dst[i * k + kk] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                }
                emit(id, ga);
            }
            if let Some(id) = rhs.node {
                let mut gb = vec![0.0; rhs.value.len()];
                for s in 0..batch {
                    let a = &lhs.value[a_off(s)..][..n * k];
                    let gs = &g[s * n * m..][..n * m];
                    let dst = &mut gb[b_off(s)..][..k * m];
                    for i in 0..n {
                        let grow = &gs[i * m..(i + 1) * m];
                        for kk in 0..k {
                            let aik = a[i * k + kk];
                            if aik == 0.0 {
                                continue;
                            }
                            for (d, gv) in dst[kk * m..(kk + 1) * m].iter_mut().zip(grow) {
                                *d += aik * gv;
                            }
                        }
                    }
                }
                emit(id, gb);
            }
        }
        Op::Sum { input } => {
            if let Some(id) = input.node {
                emit(id, vec![g[0]; input.value.len()]);
            }
        }
        Op::SumAxis {
            input,
            outer,
            len,
            inner,
        } => {
            if let Some(id) = input.node {
                let mut gx = vec![0.0; input.value.len()];
                for o in 0..*outer {
                    for l in 0..*len {
                        gx[(o * len + l) * inner..][..*inner].copy_from_slice(&g[o * inner..(o + 1) * inner]);
                    }
                }
                emit(id, gx);
            }
        }
        Op::Reshape { input } => {
            if let Some(id) = input.node {
                emit(id, g.to_vec());
            }
        }
        Op::Transpose { input, rows, cols } => {
            if let Some(id) = input.node {
                let mut gx = vec![0.0; rows * cols];
                for i in 0..*rows {
                    for j in 0..*cols {
                        gx[i * cols + j] = g[j * rows + i];
                    }
                }
                emit(id, gx);
            }
        }
        Op::Concat { inputs, outer, inner } => {
            let total: usize = inputs.iter().map(|(_, w)| w).sum();
            let mut offset = 0;
            for (operand, width) in inputs {
                if let Some(id) = operand.node {
                    let w = width * inner;
                    let mut gx = Vec::with_capacity(operand.value.len());
                    for o in 0..*outer {
                        gx.extend_from_slice(&g[o * total * inner + offset..][..w]);
                    }
                    emit(id, gx);
                }
                offset += width * inner;
            }
        }
        Op::Narrow {
            input,
            outer,
            len,
            inner,
            start,
            width,
        } => {
            if let Some(id) = input.node {
                let mut gx = vec![0.0; input.value.len()];
                let w = width * inner;
                for o in 0..*outer {
                    gx[(o * len + start) * inner..][..w].copy_from_slice(&g[o * w..(o + 1) * w]);
                }
                emit(id, gx);
            }
        }
    }
}
