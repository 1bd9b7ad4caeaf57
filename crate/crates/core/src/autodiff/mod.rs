//! Reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! ```
//! use kivi_core::autodiff::{Param, Tape};
//!
//! let theta = Param::new("theta", [3], vec![1.0, -2.0, 0.5]).unwrap();
//! let tape = Tape::new();
//! let x = tape.param(&theta);
//! let loss = x.square().unwrap().sum().unwrap().scale(0.5).unwrap();
//! let grads = loss.backward().unwrap();
//! assert_eq!(grads.param(&theta), vec![1.0, -2.0, 0.5]);
//! ```

mod ops;
mod param;
mod tape;
mod tensor;

pub use ops::{gaussian_sample, reparameterize};
pub use param::{Param, ParamId, Parameterized};
pub use tape::{Gradients, Tape};
pub use tensor::Tensor;
