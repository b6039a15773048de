//! Bias-corrected Adam.

use std::collections::BTreeMap;

use crate::nn::net::{is_trainable, Grads, Params};
use crate::nn::NnError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Error out on non-finite gradients instead of absorbing them.
    pub strict: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        // Training hyperparameters used throughout: lr 1e-4, beta1 0.5.
        AdamConfig { lr: 1e-4, beta1: 0.5, beta2: 0.999, eps: 1e-8, strict: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S: Scalar> {
    pub m: BTreeMap<String, Tensor<S>>,
    pub v: BTreeMap<String, Tensor<S>>,
    pub step: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new() -> Self {
        AdamState { m: BTreeMap::new(), v: BTreeMap::new(), step: 0 }
    }
}

impl<S: Scalar> Default for AdamState<S> {
    fn default() -> Self {
        Self::new()
    }
}

/// One Adam update over every trainable parameter present in `grads`.
pub fn adam_step<S: Scalar>(
    params: &mut Params<S>,
    grads: &Grads<S>,
    state: &mut AdamState<S>,
    cfg: &AdamConfig,
) -> Result<(), NnError> {
    state.step += 1;
    let t = state.step;
    let b1 = S::from_f64_lossy(cfg.beta1);
    let b2 = S::from_f64_lossy(cfg.beta2);
    let lr = S::from_f64_lossy(cfg.lr);
    let eps = S::from_f64_lossy(cfg.eps);
    let bc1 = S::from_f64_lossy(1.0 - cfg.beta1.powi(t as i32));
    let bc2 = S::from_f64_lossy(1.0 - cfg.beta2.powi(t as i32));
    for (name, g) in grads {
        if !is_trainable(name) {
            continue;
        }
        if cfg.strict && !g.all_finite() {
            return Err(NnError::NonFiniteGradient { name: name.clone() });
        }
        let w = params
            .tensors
            .get_mut(name)
            .ok_or_else(|| NnError::ShapeMismatch { layer: name.clone(), why: "unknown parameter".into() })?;
        let m = state.m.entry(name.clone()).or_insert_with(|| Tensor::zeros(g.shape()));
        let v = state.v.entry(name.clone()).or_insert_with(|| Tensor::zeros(g.shape()));
        if m.shape() != g.shape() || w.shape() != g.shape() {
            return Err(NnError::ShapeMismatch { layer: name.clone(), why: "grad shape mismatch".into() });
        }
        let (wd, md, vd) = (w.data_mut(), m.data_mut(), v.data_mut());
        for i in 0..g.len() {
            let gi = g.data()[i];
            md[i] = b1 * md[i] + (S::one() - b1) * gi;
            vd[i] = b2 * vd[i] + (S::one() - b2) * gi * gi;
            let mhat = md[i] / bc1;
            let vhat = vd[i] / bc2;
            wd[i] = wd[i] - lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}
