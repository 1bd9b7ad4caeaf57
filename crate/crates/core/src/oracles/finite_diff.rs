use alloc::vec::Vec;

use crate::autodiff::{Parameterized, Tape, Tensor};

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Denominator floor for [`max_relative_error`]; below this magnitude the
/// comparison is effectively absolute.
pub const RELATIVE_FLOOR: f64 = 1e-3;

/// `max_i |a_i - b_i| / max(|a_i|, |b_i|, RELATIVE_FLOOR)`.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "gradient length mismatch");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(RELATIVE_FLOOR))
        .fold(0.0, f64::max)
}

/// Compares tape gradients of `loss` with respect to every parameter of
/// `model` against central differences and returns [`max_relative_error`].
/// `loss` must be a deterministic function of the parameters, so any
/// randomness inside it has to be reseeded on every call.
pub fn parameter_gradient_error<T: Parameterized + ?Sized>(
    model: &mut T,
    loss: &dyn Fn(&T, &Tape) -> Tensor,
    h: f64,
) -> f64 {
    let tape = Tape::new();
    let grads = loss(model, &tape).backward().expect("scalar loss");
    let analytic: Vec<f64> = model.params().iter().flat_map(|p| grads.param(p)).collect();

    let mut numeric = Vec::with_capacity(analytic.len());
    let n_params = model.params().len();
    for i in 0..n_params {
        let len = model.params()[i].len();
        for j in 0..len {
            let x = model.params()[i].value()[j];
            let eval = |v: f64, model: &mut T| {
                model.params_mut()[i].value_mut()[j] = v;
                loss(model, &Tape::new()).item().expect("scalar loss")
            };
            let up = eval(x + h, model);
            let down = eval(x - h, model);
            model.params_mut()[i].value_mut()[j] = x;
            numeric.push((up - down) / (2.0 * h));
        }
    }
    max_relative_error(&analytic, &numeric)
}
