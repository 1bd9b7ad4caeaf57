use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

static NEXT_PARAM_ID: AtomicUsize = AtomicUsize::new(1);

/// Identity of a trainable parameter. Stable for the lifetime of the
/// [`Param`]; a clone of a parameter receives a fresh identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(usize);

impl ParamId {
    fn fresh() -> Self {
        ParamId(NEXT_PARAM_ID.fetch_add(1, Ordering::Relaxed))
    }
}

/// Trainable values owned outside any tape. Each training step binds the
/// parameter to a fresh [`Tape`](super::Tape) with [`Tape::param`](super::Tape::param).
#[derive(Debug, Serialize, Deserialize)]
pub struct Param {
    #[serde(skip, default = "ParamId::fresh")]
    id: ParamId,
    name: String,
    shape: Vec<usize>,
    value: Vec<f64>,
}

impl Clone for Param {
    fn clone(&self) -> Self {
        Self {
            id: ParamId::fresh(),
            name: self.name.clone(),
            shape: self.shape.clone(),
            value: self.value.clone(),
        }
    }
}

impl Param {
    pub fn new(name: impl Into<String>, shape: impl Into<Vec<usize>>, value: Vec<f64>) -> Result<Self> {
        let shape = shape.into();
        let n: usize = shape.iter().product();
        if n != value.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: value.len(),
            });
        }
        Ok(Self {
            id: ParamId::fresh(),
            name: name.into(),
            shape,
            value,
        })
    }

    pub fn zeros(name: impl Into<String>, shape: impl Into<Vec<usize>>) -> Self {
        let shape = shape.into();
        let n = shape.iter().product();
        Self {
            id: ParamId::fresh(),
            name: name.into(),
            shape,
            value: vec![0.0; n],
        }
    }

    pub fn filled(name: impl Into<String>, shape: impl Into<Vec<usize>>, v: f64) -> Self {
        let mut p = Self::zeros(name, shape);
        p.value.iter_mut().for_each(|x| *x = v);
        p
    }

    pub fn id(&self) -> ParamId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn value(&self) -> &[f64] {
        &self.value
    }

    pub fn value_mut(&mut self) -> &mut [f64] {
        &mut self.value
    }

    pub fn set_value(&mut self, value: &[f64]) -> Result<()> {
        if value.len() != self.value.len() {
            return Err(Error::DimensionMismatch {
                expected: self.value.len(),
                found: value.len(),
            });
        }
        self.value.copy_from_slice(value);
        Ok(())
    }
}

/// Anything holding trainable parameters.
pub trait Parameterized {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn num_parameters(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

impl<P: Parameterized + ?Sized> Parameterized for alloc::boxed::Box<P> {
    fn params(&self) -> Vec<&Param> {
        (**self).params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        (**self).params_mut()
    }
}
