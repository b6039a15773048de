//! Mini-batch training for the unshearing networks.

use crate::models::arch::{concat_channels, split_channels, UnshearModel};
use crate::models::losses::{mse_with_grad, patch_with_grad};
use crate::nn::{add_regularization, adam_step, sample_shift, shift_image, AdamConfig, AdamState, Grads, NnError, Params};
use crate::rng::Stream;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// (epoch, multiplier) pairs; the multiplier of the last reached entry
    /// applies from that epoch onward.
    pub lr_drops: Vec<(usize, f64)>,
    pub lambda: f64,
    pub n_crops: usize,
    pub crop_size: usize,
    pub l1: f64,
    pub l2: f64,
    pub augment: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            lr: 1e-4,
            lr_drops: vec![(40, 0.2), (80, 0.1)],
            lambda: 0.1,
            n_crops: 25,
            crop_size: 8,
            l1: 1e-4,
            l2: 1e-4,
            augment: true,
        }
    }
}

impl TrainConfig {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let mut factor = 1.0;
        for &(at, mult) in &self.lr_drops {
            if epoch >= at {
                factor = mult;
            }
        }
        self.lr * factor
    }
}

/// One sheared/canonical image pair as training tensors, each [H, W].
#[derive(Debug, Clone)]
pub struct PairImages {
    pub sheared: Tensor<f32>,
    pub canonical: Tensor<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub l_rec: f64,
    pub l_sup: f64,
    pub l_patch: f64,
    pub l_val: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    /// Parameters at the epoch with the lowest validation canonical loss.
    pub params: Params<f32>,
    pub adam: AdamState<f32>,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

pub fn history_csv(history: &[EpochStats]) -> String {
    let mut s = String::from("epoch,l_rec,l_sup,l_patch,l_val\n");
    for e in history {
        s.push_str(&format!("{},{:.9},{:.9},{:.9},{:.9}\n", e.epoch, e.l_rec, e.l_sup, e.l_patch, e.l_val));
    }
    s
}

fn stack_batch(pairs: &[&PairImages], augment: bool, stream: &mut Stream) -> (Tensor<f32>, Tensor<f32>) {
    let n = pairs.len();
    let (h, w) = (pairs[0].sheared.shape()[0], pairs[0].sheared.shape()[1]);
    let mut xs = Vec::with_capacity(n * h * w);
    let mut ts = Vec::with_capacity(n * h * w);
    for p in pairs {
        if augment {
            // Input and target move together; the shift is a camera offset,
            // not a contact change.
            let (dy, dx) = sample_shift(h.max(w), stream);
            xs.extend(shift_image(p.sheared.data(), h, w, dy, dx));
            ts.extend(shift_image(p.canonical.data(), h, w, dy, dx));
        } else {
            xs.extend_from_slice(p.sheared.data());
            ts.extend_from_slice(p.canonical.data());
        }
    }
    (Tensor::from_vec(&[n, 1, h, w], xs), Tensor::from_vec(&[n, 1, h, w], ts))
}

pub struct StepLosses {
    pub l_rec: f64,
    pub l_sup: f64,
    pub l_patch: f64,
}

/// One forward/backward pass over a batch. Each parameter's gradient follows
/// its own objective: decoders see only their own loss, the encoder and code
/// heads see the sum.
pub fn batch_grads<S: Scalar>(
    model: &UnshearModel,
    params: &mut Params<S>,
    x: &Tensor<S>,
    target: &Tensor<S>,
    cfg: &TrainConfig,
    patch_stream: &mut Stream,
) -> Result<(Grads<S>, StepLosses), NnError> {
    let lambda = S::from_f64_lossy(cfg.lambda);
    let (trunk, enc_cache) = model.encoder.forward_train(params, x)?;
    let (z_p, hp_cache) = model.head_p.forward_train(params, &trunk)?;
    let (pc, dc_cache) = model.dec_c.forward_train(params, &z_p)?;

    let (l_sup, mut g_pc) = mse_with_grad(&pc, target);
    let (l_patch, g_patch) = patch_with_grad(&pc, target, cfg.n_crops, cfg.crop_size, patch_stream);
    for (g, &p) in g_pc.data_mut().iter_mut().zip(g_patch.data()) {
        *g += lambda * p;
    }
    let (mut grads, g_zp_canon) = model.dec_c.backward(params, &dc_cache, &g_pc)?;

    let mut l_rec = S::zero();
    let mut g_zp = g_zp_canon;
    let mut g_trunk_extra: Option<Tensor<S>> = None;
    if let (Some(head_s), Some(dec_s)) = (&model.head_s, &model.dec_s) {
        let (z_s, hs_cache) = head_s.forward_train(params, &trunk)?;
        let code = concat_channels(&z_p, &z_s);
        let (ps, ds_cache) = dec_s.forward_train(params, &code)?;
        let (rec, g_ps) = mse_with_grad(&ps, x);
        l_rec = rec;
        let (ds_grads, g_code) = dec_s.backward(params, &ds_cache, &g_ps)?;
        grads.extend(ds_grads);
        let (g_zp_rec, g_zs) = split_channels(&g_code, z_p.shape()[1]);
        for (a, &b) in g_zp.data_mut().iter_mut().zip(g_zp_rec.data()) {
            *a += b;
        }
        let (hs_grads, g_trunk_s) = head_s.backward(params, &hs_cache, &g_zs)?;
        grads.extend(hs_grads);
        g_trunk_extra = Some(g_trunk_s);
    }

    let (hp_grads, mut g_trunk) = model.head_p.backward(params, &hp_cache, &g_zp)?;
    grads.extend(hp_grads);
    if let Some(extra) = g_trunk_extra {
        for (a, &b) in g_trunk.data_mut().iter_mut().zip(extra.data()) {
            *a += b;
        }
    }
    let (enc_grads, _) = model.encoder.backward(params, &enc_cache, &g_trunk)?;
    grads.extend(enc_grads);

    add_regularization(params, &mut grads, cfg.l1, cfg.l2);
    Ok((
        grads,
        StepLosses { l_rec: l_rec.to_f64_lossy(), l_sup: l_sup.to_f64_lossy(), l_patch: l_patch.to_f64_lossy() },
    ))
}

/// Validation canonical loss L_sup + lambda * L_patch in eval mode, with
/// crops drawn from a fixed stream so epochs stay comparable.
pub fn validation_loss(
    model: &UnshearModel,
    params: &Params<f32>,
    val: &[PairImages],
    cfg: &TrainConfig,
) -> Result<f64, NnError> {
    assert!(!val.is_empty(), "empty validation set");
    let mut total = 0.0;
    let mut count = 0.0;
    let mut crops = Stream::new(0, "val.crops");
    for chunk in val.chunks(cfg.batch_size.max(1)) {
        let refs: Vec<&PairImages> = chunk.iter().collect();
        let (x, t) = stack_batch(&refs, false, &mut Stream::new(0, "unused"));
        let out = model.forward_eval(params, &x)?;
        let (l_sup, _) = mse_with_grad(&out.pc, &t);
        let (l_patch, _) = patch_with_grad(&out.pc, &t, cfg.n_crops, cfg.crop_size, &mut crops);
        total += (l_sup as f64 + cfg.lambda * l_patch as f64) * chunk.len() as f64;
        count += chunk.len() as f64;
    }
    Ok(total / count)
}

pub fn train_unshear(
    model: &UnshearModel,
    train: &[PairImages],
    val: &[PairImages],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainResult, NnError> {
    assert!(!train.is_empty(), "empty training set");
    let mut params: Params<f32> = model.init_params(seed);
    let mut adam = AdamState::new();
    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(cfg.epochs);

    let mut order_stream = Stream::new(seed, "train.order");
    let mut aug_stream = Stream::new(seed, "train.augment");
    let mut patch_stream = Stream::new(seed, "train.patch");

    for epoch in 0..cfg.epochs {
        let adam_cfg = AdamConfig { lr: cfg.lr_at(epoch), ..AdamConfig::default() };
        let mut order: Vec<usize> = (0..train.len()).collect();
        order_stream.shuffle(&mut order);
        let mut sums = StepLosses { l_rec: 0.0, l_sup: 0.0, l_patch: 0.0 };
        let mut n_batches = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let refs: Vec<&PairImages> = chunk.iter().map(|&i| &train[i]).collect();
            let (x, t) = stack_batch(&refs, cfg.augment, &mut aug_stream);
            let (grads, losses) = batch_grads(model, &mut params, &x, &t, cfg, &mut patch_stream)?;
            if !losses.l_sup.is_finite() || !losses.l_rec.is_finite() {
                return Err(NnError::NonFiniteGradient { name: format!("loss at epoch {epoch}") });
            }
            adam_step(&mut params, &grads, &mut adam, &adam_cfg)?;
            sums.l_rec += losses.l_rec;
            sums.l_sup += losses.l_sup;
            sums.l_patch += losses.l_patch;
            n_batches += 1.0;
        }
        let l_val = validation_loss(model, &params, val, cfg)?;
        history.push(EpochStats {
            epoch,
            l_rec: sums.l_rec / n_batches,
            l_sup: sums.l_sup / n_batches,
            l_patch: sums.l_patch / n_batches,
            l_val,
        });
        if l_val < best_val {
            best_val = l_val;
            best = params.clone();
            best_epoch = epoch;
        }
    }
    if cfg.epochs == 0 {
        best = params;
    }
    Ok(TrainResult { params: best, adam, history, best_epoch })
}
