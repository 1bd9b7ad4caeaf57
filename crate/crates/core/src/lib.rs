#![no_std]
// `!(x > 0.0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autodiff;
pub mod dre;
pub mod error;
pub mod linalg;
pub mod oracles;
pub mod models;
pub mod posteriors;
pub mod rng;
pub mod special;
pub mod vi;

pub use error::{Error, Result};
