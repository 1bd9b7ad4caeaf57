use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use super::ops::{backward_op, Op};
use super::param::{Param, ParamId};
use super::tensor::{NodeRef, Tensor};
use crate::error::{Error, Result};

pub(crate) struct Node {
    pub op: Op,
    pub shape: Vec<usize>,
    pub value: Rc<[f64]>,
}

#[derive(Default)]
struct TapeInner {
    nodes: Vec<Node>,
    params: BTreeMap<ParamId, usize>,
    check_finite: bool,
}

/// Dynamic record of differentiable operations.
///
/// Cheap to clone (shared handle). A tape is built fresh for every training
/// step; nodes are appended in evaluation order, so parents always precede
/// children and a single reverse sweep visits each node once.
#[derive(Clone, Default)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
}

impl core::fmt::Debug for Tape {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Tape").field("nodes", &self.len()).finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Report non-finite forward values as errors at the producing operation.
    pub fn with_finite_checks(self) -> Self {
        self.inner.borrow_mut().check_finite = true;
        self
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn same(&self, other: &Tape) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }

    /// Leaf tensor for a parameter. Binding the same parameter twice returns
    /// the same node.
    pub fn param(&self, p: &Param) -> Tensor {
        let existing = self.inner.borrow().params.get(&p.id()).copied();
        let id = match existing {
            Some(id) => id,
            None => {
                let id = self.push_leaf(p.shape().to_vec(), Rc::from(p.value()));
                self.inner.borrow_mut().params.insert(p.id(), id);
                id
            }
        };
        let inner = self.inner.borrow();
        let node = &inner.nodes[id];
        Tensor {
            shape: node.shape.clone(),
            data: node.value.clone(),
            node: Some(NodeRef {
                tape: self.clone(),
                id,
            }),
        }
    }

    /// Fresh differentiable leaf not associated with a [`Param`].
    pub fn variable(&self, data: Vec<f64>, shape: impl Into<Vec<usize>>) -> Result<Tensor> {
        let t = Tensor::new(data, shape)?;
        let id = self.push_leaf(t.shape.clone(), t.data.clone());
        Ok(Tensor {
            node: Some(NodeRef {
                tape: self.clone(),
                id,
            }),
            ..t
        })
    }

    fn push_leaf(&self, shape: Vec<usize>, value: Rc<[f64]>) -> usize {
        let mut inner = self.inner.borrow_mut();
        inner.nodes.push(Node {
            op: Op::Leaf,
            shape,
            value,
        });
        inner.nodes.len() - 1
    }

    pub(crate) fn push(
        &self,
        op: Op,
        shape: Vec<usize>,
        value: Vec<f64>,
        name: &'static str,
    ) -> Result<Tensor> {
        let mut inner = self.inner.borrow_mut();
        if inner.check_finite && value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: name });
        }
        let value: Rc<[f64]> = Rc::from(value);
        inner.nodes.push(Node {
            op,
            shape: shape.clone(),
            value: value.clone(),
        });
        let id = inner.nodes.len() - 1;
        Ok(Tensor {
            shape,
            data: value,
            node: Some(NodeRef {
                tape: self.clone(),
                id,
            }),
        })
    }

    pub(crate) fn backward_from(&self, root: usize) -> Gradients {
        let inner = self.inner.borrow();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; root + 1];
        grads[root] = Some(vec![1.0; inner.nodes[root].value.len()]);
        for id in (0..=root).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &inner.nodes[id];
            backward_op(&node.op, &node.value, &g, &mut |parent, contrib| {
                accumulate(&mut grads[parent], contrib);
            });
            grads[id] = Some(g);
        }
        Gradients {
            tape: self.clone(),
            grads,
            params: inner.params.clone(),
        }
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, contrib: Vec<f64>) {
    match slot {
        Some(acc) => acc.iter_mut().zip(contrib).for_each(|(a, c)| *a += c),
        None => *slot = Some(contrib),
    }
}

/// Result of a reverse sweep.
pub struct Gradients {
    tape: Tape,
    grads: Vec<Option<Vec<f64>>>,
    params: BTreeMap<ParamId, usize>,
}

impl Gradients {
    /// Gradient with respect to a tensor recorded on the same tape; `None`
    /// for constants, other tapes and nodes the root does not depend on.
    pub fn wrt(&self, t: &Tensor) -> Option<&[f64]> {
        let node = t.node.as_ref()?;
        if !node.tape.same(&self.tape) {
            return None;
        }
        self.grads.get(node.id)?.as_deref()
    }

    /// Gradient with respect to a parameter; zeros if it did not influence the root.
    pub fn param(&self, p: &Param) -> Vec<f64> {
        self.params
            .get(&p.id())
            .and_then(|&id| self.grads.get(id))
            .and_then(|g| g.clone())
            .unwrap_or_else(|| vec![0.0; p.len()])
    }

    /// Gradients for a constant root: everything is zero.
    pub(crate) fn empty() -> Self {
        Self {
            tape: Tape::new(),
            grads: Vec::new(),
            params: BTreeMap::new(),
        }
    }
}
