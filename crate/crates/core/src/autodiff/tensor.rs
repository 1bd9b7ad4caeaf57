use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use super::tape::{Gradients, Tape};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;

#[derive(Clone)]
pub(crate) struct NodeRef {
    pub tape: Tape,
    pub id: usize,
}

/// Dense row-major `f64` array, optionally attached to a [`Tape`].
///
/// A tensor without a tape node is a constant: operations treat it as
/// having zero derivative.
#[derive(Clone)]
pub struct Tensor {
    pub(crate) shape: Vec<usize>,
    pub(crate) data: Rc<[f64]>,
    pub(crate) node: Option<NodeRef>,
}

impl core::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("tracked", &self.node.is_some())
            .field("data", &&self.data[..self.data.len().min(8)])
            .finish()
    }
}

impl Tensor {
    pub fn new(data: Vec<f64>, shape: impl Into<Vec<usize>>) -> Result<Self> {
        let shape = shape.into();
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: data.len(),
            });
        }
        Ok(Self {
            shape,
            data: Rc::from(data),
            node: None,
        })
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: Rc::from(vec![v]),
            node: None,
        }
    }

    pub fn full(shape: impl Into<Vec<usize>>, v: f64) -> Self {
        let shape = shape.into();
        let n = shape.iter().product();
        Self {
            shape,
            data: Rc::from(vec![v; n]),
            node: None,
        }
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn ones(shape: impl Into<Vec<usize>>) -> Self {
        Self::full(shape, 1.0)
    }

    /// Standard-normal constant.
    pub fn randn(shape: impl Into<Vec<usize>>, rng: &mut Rng) -> Self {
        let shape = shape.into();
        let n = shape.iter().product();
        Self {
            shape,
            data: Rc::from(rng.normals(n)),
            node: None,
        }
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        Self {
            shape: vec![m.rows(), m.cols()],
            data: Rc::from(m.as_slice()),
            node: None,
        }
    }

    pub fn to_matrix(&self) -> Result<Matrix> {
        match self.shape[..] {
            [r, c] => Matrix::from_vec(r, c, self.data.to_vec()),
            [n] => Matrix::from_vec(n, 1, self.data.to_vec()),
            _ => Err(Error::ShapeMismatch {
                op: "to_matrix",
                lhs: self.shape.clone(),
                rhs: vec![0, 0],
            }),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.data.to_vec()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> Result<f64> {
        if self.data.len() != 1 {
            return Err(Error::NonScalarRoot(self.shape.clone()));
        }
        Ok(self.data[0])
    }

    pub fn is_tracked(&self) -> bool {
        self.node.is_some()
    }

    pub fn tape(&self) -> Option<&Tape> {
        self.node.as_ref().map(|n| &n.tape)
    }

    /// Same values, no tape node. Downstream operations see a constant.
    pub fn detach(&self) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.clone(),
            node: None,
        }
    }

    /// Reverse-mode sweep from this scalar.
    pub fn backward(&self) -> Result<Gradients> {
        if self.data.len() != 1 {
            return Err(Error::NonScalarRoot(self.shape.clone()));
        }
        Ok(match &self.node {
            Some(n) => n.tape.backward_from(n.id),
            None => Gradients::empty(),
        })
    }
}
