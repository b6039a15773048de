//! Central finite-difference verification of analytic gradients (f64).

use crate::nn::net::{is_trainable, Grads, Params};

pub const FD_STEP: f64 = 1e-5;

/// Max relative error between analytic grads and central finite differences
/// of `loss` over every trainable parameter element.
pub fn max_rel_error(
    params: &Params<f64>,
    analytic: &Grads<f64>,
    mut loss: impl FnMut(&Params<f64>) -> f64,
    h: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (name, g) in analytic {
        if !is_trainable(name) {
            continue;
        }
        for i in 0..g.len() {
            let mut plus = params.clone();
            plus.tensors.get_mut(name).unwrap().data_mut()[i] += h;
            let mut minus = params.clone();
            minus.tensors.get_mut(name).unwrap().data_mut()[i] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let an = g.data()[i];
            // The floor absorbs central-difference cancellation noise
            // (~1e-11 for f64 at h=1e-5) on analytically-zero entries.
            let denom = fd.abs().max(an.abs()).max(1e-4);
            worst = worst.max((fd - an).abs() / denom);
        }
    }
    worst
}
