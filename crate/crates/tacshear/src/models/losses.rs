//! Training objectives for the unshearing networks.

use crate::rng::Stream;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Mean squared error and its gradient w.r.t. the prediction.
pub fn mse_with_grad<S: Scalar>(pred: &Tensor<S>, target: &Tensor<S>) -> (S, Tensor<S>) {
    assert_eq!(pred.shape(), target.shape(), "loss shape mismatch");
    let n = S::from_f64_lossy(pred.len() as f64);
    let two = S::from_f64_lossy(2.0);
    let mut grad = Tensor::zeros(pred.shape());
    let mut loss = S::zero();
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p - t;
        loss += d * d;
        *g = two * d / n;
    }
    (loss / n, grad)
}

/// L2 canonical-matching loss: full-image mean squared error.
pub fn loss_sup<S: Scalar>(predicted_canonical: &Tensor<S>, target_canonical: &Tensor<S>) -> S {
    mse_with_grad(predicted_canonical, target_canonical).0
}

/// Input reconstruction loss: the same kernel applied to (PS, S).
pub fn loss_rec<S: Scalar>(predicted_sheared: &Tensor<S>, input_sheared: &Tensor<S>) -> S {
    mse_with_grad(predicted_sheared, input_sheared).0
}

/// L1 patch loss and gradient: mean absolute error over `n_crops` random
/// crops per image, taken at identical locations in prediction and target.
/// Inputs are [N, 1, H, W].
pub fn patch_with_grad<S: Scalar>(
    pred: &Tensor<S>,
    target: &Tensor<S>,
    n_crops: usize,
    crop_size: usize,
    stream: &mut Stream,
) -> (S, Tensor<S>) {
    assert_eq!(pred.shape(), target.shape(), "loss shape mismatch");
    assert_eq!(pred.shape().len(), 4, "expected [N,1,H,W]");
    let (n, h, w) = (pred.shape()[0], pred.shape()[2], pred.shape()[3]);
    assert!(crop_size <= h && crop_size <= w, "crop {crop_size} larger than {h}x{w} image");
    let count = S::from_f64_lossy((n * n_crops * crop_size * crop_size) as f64);
    let mut grad = Tensor::zeros(pred.shape());
    let mut loss = S::zero();
    for img in 0..n {
        let base = img * h * w;
        for _ in 0..n_crops {
            let r0 = stream.below(h - crop_size + 1);
            let c0 = stream.below(w - crop_size + 1);
            for r in r0..r0 + crop_size {
                for c in c0..c0 + crop_size {
                    let i = base + r * w + c;
                    let d = pred.data()[i] - target.data()[i];
                    loss += d.abs();
                    let sign = if d > S::zero() {
                        S::one()
                    } else if d < S::zero() {
                        -S::one()
                    } else {
                        S::zero()
                    };
                    grad.data_mut()[i] += sign / count;
                }
            }
        }
    }
    (loss / count, grad)
}

pub fn loss_patch<S: Scalar>(
    predicted_canonical: &Tensor<S>,
    target_canonical: &Tensor<S>,
    n_crops: usize,
    crop_size: usize,
    seed: u64,
) -> S {
    let mut st = Stream::new(seed, "patch");
    patch_with_grad(predicted_canonical, target_canonical, n_crops, crop_size, &mut st).0
}

/// Per-network objective totals. `l_rec` is `None` for the entangled variant,
/// which also has no DS decoder.
pub fn total_objectives(l_rec: Option<f64>, l_sup: f64, l_patch: f64, lambda: f64) -> (f64, f64, Option<f64>) {
    assert!(lambda > 0.0, "lambda must be positive");
    let canonical = l_sup + lambda * l_patch;
    match l_rec {
        Some(rec) => (rec + canonical, canonical, Some(rec)),
        None => (canonical, canonical, None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_hand_values() {
        let zeros = Tensor::<f64>::zeros(&[1, 1, 64, 64]);
        let ones = Tensor::<f64>::full(&[1, 1, 64, 64], 1.0);
        assert_eq!(loss_sup(&zeros, &zeros), 0.0);
        assert_eq!(loss_sup(&zeros, &ones), 1.0);
        assert_eq!(loss_sup(&zeros, &ones), loss_sup(&ones, &zeros));
    }

    #[test]
    fn rec_is_same_kernel() {
        let mut st = Stream::new(4, "pair");
        let a = Tensor::from_vec(&[2, 1, 8, 8], (0..128).map(|_| st.uniform()).collect::<Vec<f64>>());
        let b = Tensor::from_vec(&[2, 1, 8, 8], (0..128).map(|_| st.uniform()).collect::<Vec<f64>>());
        assert_eq!(loss_rec(&a, &b), loss_sup(&a, &b));
        let a32: Tensor<f32> = a.cast();
        let b32: Tensor<f32> = b.cast();
        let rel = (loss_rec(&a32, &b32) as f64 - loss_rec(&a, &b)).abs() / loss_rec(&a, &b);
        assert!(rel < 1e-5, "f32/f64 disagreement {rel}");
    }

    #[test]
    fn patch_constant_difference() {
        let a = Tensor::<f64>::full(&[3, 1, 64, 64], 0.75);
        let b = Tensor::<f64>::full(&[3, 1, 64, 64], 0.25);
        for seed in [1, 2, 99] {
            assert!((loss_patch(&a, &b, 25, 8, seed) - 0.5).abs() < 1e-12);
            assert_eq!(loss_patch(&a, &a, 25, 8, seed), 0.0);
        }
    }

    #[test]
    fn patch_gradient_matches_finite_difference() {
        let mut st = Stream::new(8, "img");
        let mut a = Tensor::from_vec(&[1, 1, 16, 16], (0..256).map(|_| st.uniform()).collect::<Vec<f64>>());
        let b = Tensor::from_vec(&[1, 1, 16, 16], (0..256).map(|_| st.uniform()).collect::<Vec<f64>>());
        let (_, grad) = patch_with_grad(&a, &b, 5, 4, &mut Stream::new(3, "crops"));
        let h = 1e-6;
        for i in (0..256).step_by(37) {
            let orig = a.data()[i];
            a.data_mut()[i] = orig + h;
            let up = patch_with_grad(&a, &b, 5, 4, &mut Stream::new(3, "crops")).0;
            a.data_mut()[i] = orig - h;
            let dn = patch_with_grad(&a, &b, 5, 4, &mut Stream::new(3, "crops")).0;
            a.data_mut()[i] = orig;
            let fd = (up - dn) / (2.0 * h);
            assert!((fd - grad.data()[i]).abs() < 1e-6, "pixel {i}: fd {fd} vs {}", grad.data()[i]);
        }
    }

    #[test]
    fn objective_arithmetic() {
        let (le, ldc, lds) = total_objectives(Some(1.0), 2.0, 3.0, 0.1);
        assert!((le - 3.3).abs() < 1e-12);
        assert!((ldc - 2.3).abs() < 1e-12);
        assert_eq!(lds, Some(1.0));
        assert_eq!(total_objectives(Some(0.0), 0.0, 0.0, 0.1), (0.0, 0.0, Some(0.0)));
        let (le, ldc, lds) = total_objectives(None, 2.0, 3.0, 0.1);
        assert!((le - 2.3).abs() < 1e-12 && (ldc - 2.3).abs() < 1e-12);
        assert_eq!(lds, None);
    }
}
