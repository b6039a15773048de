//! Pose regression from a single tactile frame: five convolution stages with
//! two max pools, then a small dense head ending in a sigmoid pair that maps
//! back to millimetres and degrees.

use crate::nn::{adam_step, add_regularization, sample_shift, shift_image, AdamConfig, AdamState, LayerSpec, Network, NnError, Params};
use crate::rng::Stream;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosePrediction {
    pub tau_x_mm: f64,
    pub yaw_deg: f64,
    pub normalized: bool,
}

/// Target normalization: physical range to [0, 1] and back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRanges {
    pub tau_x_mm: (f64, f64),
    pub yaw_deg: (f64, f64),
}

impl PoseRanges {
    pub fn desk() -> Self {
        PoseRanges { tau_x_mm: (-5.0, 5.0), yaw_deg: (-45.0, 45.0) }
    }

    pub fn normalize(&self, tau_x: f64, yaw: f64) -> [f64; 2] {
        let n = |v: f64, (lo, hi): (f64, f64)| (v - lo) / (hi - lo);
        [n(tau_x, self.tau_x_mm), n(yaw, self.yaw_deg)]
    }

    pub fn denormalize(&self, norm: [f64; 2]) -> (f64, f64) {
        let d = |v: f64, (lo, hi): (f64, f64)| lo + v * (hi - lo);
        (d(norm[0], self.tau_x_mm), d(norm[1], self.yaw_deg))
    }
}

#[derive(Debug, Clone)]
pub struct PoseNet {
    pub net: Network,
    pub ranges: PoseRanges,
    pub input_size: usize,
}

impl PoseNet {
    /// Desk-scale plan: pools after the second and fourth convolutions, a
    /// strided first stage to keep the early layers cheap at 64 px.
    pub fn desk() -> Self {
        PoseNet::with_plan(64, &[(4, 2), (8, 1), (16, 1), (32, 1), (32, 1)], 64)
    }

    /// Shrunken net for fast unit tests.
    pub fn tiny() -> Self {
        PoseNet::with_plan(16, &[(2, 1), (3, 1), (4, 1), (4, 1), (4, 1)], 8)
    }

    fn with_plan(input_size: usize, convs: &[(usize, usize)], hidden: usize) -> Self {
        assert_eq!(convs.len(), 5, "five convolution stages");
        let mut layers = Vec::new();
        let mut in_ch = 1;
        let mut side = input_size;
        for (i, &(out_ch, stride)) in convs.iter().enumerate() {
            layers.push(LayerSpec::Conv2d { in_ch, out_ch, kernel: 3, stride });
            layers.push(LayerSpec::BatchNorm { channels: out_ch });
            layers.push(LayerSpec::Relu);
            side = side.div_ceil(stride);
            if i == 1 || i == 3 {
                layers.push(LayerSpec::MaxPool);
                side /= 2;
            }
            in_ch = out_ch;
        }
        layers.push(LayerSpec::Flatten);
        let feat = side * side * in_ch;
        layers.push(LayerSpec::Dense { in_features: feat, out_features: hidden });
        layers.push(LayerSpec::Relu);
        layers.push(LayerSpec::Dense { in_features: hidden, out_features: 2 });
        layers.push(LayerSpec::Sigmoid);
        PoseNet { net: Network::new("pose", layers), ranges: PoseRanges::desk(), input_size }
    }

    pub fn init_params<S: Scalar>(&self, seed: u64) -> Params<S> {
        self.net.init_params(seed)
    }

    /// Predict pose for one [H, W] frame, in physical units.
    pub fn predict<S: Scalar>(&self, params: &Params<S>, frame: &Tensor<S>) -> Result<PosePrediction, NnError> {
        assert_eq!(frame.shape(), &[self.input_size, self.input_size], "frame size mismatch");
        let x = frame.clone().reshape(&[1, 1, self.input_size, self.input_size]);
        let out = self.net.forward_eval(params, &x)?;
        let norm = [out.data()[0].to_f64_lossy(), out.data()[1].to_f64_lossy()];
        let (tau_x, yaw) = self.ranges.denormalize(norm);
        Ok(PosePrediction { tau_x_mm: tau_x, yaw_deg: yaw, normalized: false })
    }
}

/// One labelled frame: [H, W] image plus physical-unit targets.
#[derive(Debug, Clone)]
pub struct LabelledFrame {
    pub image: Tensor<f32>,
    pub tau_x_mm: f64,
    pub yaw_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_drops: Vec<(usize, f64)>,
    pub l1: f64,
    pub l2: f64,
    pub augment: bool,
}

impl Default for PoseTrainConfig {
    fn default() -> Self {
        // Paper protocol runs 250 epochs with drops at 100 and 200; the desk
        // run uses the same shape compressed to a quarter of the length.
        PoseTrainConfig {
            epochs: 60,
            batch_size: 32,
            lr: 1e-4,
            lr_drops: vec![(24, 0.5), (48, 0.1)],
            l1: 1e-4,
            l2: 1e-4,
            augment: true,
        }
    }
}

impl PoseTrainConfig {
    pub fn paper() -> Self {
        PoseTrainConfig {
            epochs: 250,
            batch_size: 256,
            lr_drops: vec![(100, 0.5), (200, 0.1)],
            ..PoseTrainConfig::default()
        }
    }

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

#[derive(Debug, Clone)]
pub struct PoseTrainResult {
    pub params: Params<f32>,
    pub adam: AdamState<f32>,
    /// Per-epoch (training L2 loss, validation L2 loss), normalized units.
    pub history: Vec<(f64, f64)>,
    pub best_epoch: usize,
}

fn batch_tensors(
    frames: &[&LabelledFrame],
    ranges: &PoseRanges,
    augment: bool,
    stream: &mut Stream,
) -> (Tensor<f32>, Vec<[f32; 2]>) {
    let n = frames.len();
    let (h, w) = (frames[0].image.shape()[0], frames[0].image.shape()[1]);
    let mut xs = Vec::with_capacity(n * h * w);
    let mut ts = Vec::with_capacity(n);
    for f in frames {
        if augment {
            let (dy, dx) = sample_shift(h.max(w), stream);
            xs.extend(shift_image(f.image.data(), h, w, dy, dx));
        } else {
            xs.extend_from_slice(f.image.data());
        }
        let norm = ranges.normalize(f.tau_x_mm, f.yaw_deg);
        ts.push([norm[0] as f32, norm[1] as f32]);
    }
    (Tensor::from_vec(&[n, 1, h, w], xs), ts)
}

fn l2_loss_grad(pred: &Tensor<f32>, targets: &[[f32; 2]]) -> (f64, Tensor<f32>) {
    let n = (targets.len() * 2) as f32;
    let mut grad = Tensor::zeros(pred.shape());
    let mut loss = 0.0f32;
    for (i, t) in targets.iter().enumerate() {
        for j in 0..2 {
            let d = pred.data()[i * 2 + j] - t[j];
            loss += d * d;
            grad.data_mut()[i * 2 + j] = 2.0 * d / n;
        }
    }
    ((loss / n) as f64, grad)
}

fn eval_loss(model: &PoseNet, params: &Params<f32>, frames: &[LabelledFrame], batch: usize) -> Result<f64, NnError> {
    let mut total = 0.0;
    for chunk in frames.chunks(batch.max(1)) {
        let refs: Vec<&LabelledFrame> = chunk.iter().collect();
        let (x, t) = batch_tensors(&refs, &model.ranges, false, &mut Stream::new(0, "unused"));
        let out = model.net.forward_eval(params, &x)?;
        let (l, _) = l2_loss_grad(&out, &t);
        total += l * chunk.len() as f64;
    }
    Ok(total / frames.len() as f64)
}

pub fn train_posenet(
    model: &PoseNet,
    train: &[LabelledFrame],
    val: &[LabelledFrame],
    cfg: &PoseTrainConfig,
    seed: u64,
) -> Result<PoseTrainResult, NnError> {
    assert!(!train.is_empty() && !val.is_empty(), "empty dataset");
    let mut params: Params<f32> = model.init_params(seed);
    let mut adam = AdamState::new();
    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order_stream = Stream::new(seed, "pose.order");
    let mut aug_stream = Stream::new(seed, "pose.augment");

    for epoch in 0..cfg.epochs {
        let adam_cfg = AdamConfig { lr: cfg.lr_at(epoch), ..AdamConfig::default() };
        let mut order: Vec<usize> = (0..train.len()).collect();
        order_stream.shuffle(&mut order);
        let mut train_loss = 0.0;
        let mut n_batches = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let refs: Vec<&LabelledFrame> = chunk.iter().map(|&i| &train[i]).collect();
            let (x, t) = batch_tensors(&refs, &model.ranges, cfg.augment, &mut aug_stream);
            let (out, cache) = model.net.forward_train(&mut params, &x)?;
            let (loss, g) = l2_loss_grad(&out, &t);
            if !loss.is_finite() {
                return Err(NnError::NonFiniteGradient { name: format!("pose loss at epoch {epoch}") });
            }
            let (mut grads, _) = model.net.backward(&params, &cache, &g)?;
            add_regularization(&params, &mut grads, cfg.l1, cfg.l2);
            adam_step(&mut params, &grads, &mut adam, &adam_cfg)?;
            train_loss += loss;
            n_batches += 1.0;
        }
        let val_loss = eval_loss(model, &params, val, cfg.batch_size)?;
        history.push((train_loss / n_batches, val_loss));
        if val_loss < best_val {
            best_val = val_loss;
            best = params.clone();
            best_epoch = epoch;
        }
    }
    if cfg.epochs == 0 {
        best = params;
    }
    Ok(PoseTrainResult { params: best, adam, history, best_epoch })
}

/// Componentwise mean absolute error in physical units.
pub fn evaluate_mae(
    model: &PoseNet,
    params: &Params<f32>,
    frames: &[LabelledFrame],
) -> Result<(f64, f64), NnError> {
    assert!(!frames.is_empty(), "empty evaluation set");
    let mut mae_x = 0.0;
    let mut mae_yaw = 0.0;
    for f in frames {
        let p = model.predict(params, &f.image)?;
        mae_x += (p.tau_x_mm - f.tau_x_mm).abs();
        mae_yaw += (p.yaw_deg - f.yaw_deg).abs();
    }
    let n = frames.len() as f64;
    Ok((mae_x / n, mae_yaw / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_frames(n: usize, seed: u64, constant: Option<(f64, f64)>) -> Vec<LabelledFrame> {
        let mut st = Stream::new(seed, "frames");
        (0..n)
            .map(|_| {
                let image = Tensor::from_vec(&[16, 16], (0..256).map(|_| st.uniform() as f32).collect());
                let (tau_x_mm, yaw_deg) = match constant {
                    Some(c) => c,
                    None => (st.uniform_in(-5.0, 5.0), st.uniform_in(-45.0, 45.0)),
                };
                LabelledFrame { image, tau_x_mm, yaw_deg }
            })
            .collect()
    }

    #[test]
    fn normalization_round_trip() {
        let r = PoseRanges::desk();
        for (x, yaw) in [(-5.0, -45.0), (0.0, 0.0), (3.25, 17.5), (5.0, 45.0)] {
            let (bx, byaw) = r.denormalize(r.normalize(x, yaw));
            assert!((bx - x).abs() < 1e-6 && (byaw - yaw).abs() < 1e-6);
        }
    }

    #[test]
    fn untrained_predictions_sit_near_range_center() {
        let model = PoseNet::tiny();
        let params: Params<f32> = model.init_params(3);
        let f = &tiny_frames(1, 1, None)[0];
        let p = model.predict(&params, &f.image).unwrap();
        // Sigmoid of a near-zero logit is near 0.5, the middle of each range.
        assert!(p.tau_x_mm.abs() < 1.0, "tau_x {}", p.tau_x_mm);
        assert!(p.yaw_deg.abs() < 9.0, "yaw {}", p.yaw_deg);
        assert_eq!(model.predict(&params, &f.image).unwrap(), p);
    }

    #[test]
    fn constant_target_convergence() {
        let model = PoseNet::tiny();
        let frames = tiny_frames(8, 5, Some((2.0, -10.0)));
        let cfg = PoseTrainConfig {
            epochs: 150,
            batch_size: 8,
            lr: 1e-2,
            lr_drops: vec![],
            l1: 0.0,
            l2: 0.0,
            augment: false,
        };
        let result = train_posenet(&model, &frames, &frames, &cfg, 2).unwrap();
        let want = model.ranges.normalize(2.0, -10.0);
        for f in &frames {
            let p = model.predict(&result.params, &f.image).unwrap();
            let got = model.ranges.normalize(p.tau_x_mm, p.yaw_deg);
            assert!((got[0] - want[0]).abs() < 1e-2, "tau_x off: {} vs {}", got[0], want[0]);
            assert!((got[1] - want[1]).abs() < 1e-2, "yaw off: {} vs {}", got[1], want[1]);
        }
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let model = PoseNet::tiny();
        let frames = tiny_frames(4, 9, None);
        let cfg = PoseTrainConfig { epochs: 0, ..PoseTrainConfig::default() };
        let result = train_posenet(&model, &frames, &frames, &cfg, 77).unwrap();
        assert_eq!(result.params, model.init_params::<f32>(77));
    }

    #[test]
    fn training_is_deterministic() {
        let model = PoseNet::tiny();
        let train = tiny_frames(8, 1, None);
        let val = tiny_frames(4, 2, None);
        let cfg = PoseTrainConfig { epochs: 2, batch_size: 4, ..PoseTrainConfig::default() };
        let a = train_posenet(&model, &train, &val, &cfg, 5).unwrap();
        let b = train_posenet(&model, &train, &val, &cfg, 5).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn mae_basics() {
        let model = PoseNet::tiny();
        let frames = tiny_frames(6, 4, None);
        let params: Params<f32> = model.init_params(1);
        let (mx, myaw) = evaluate_mae(&model, &params, &frames).unwrap();
        assert!(mx >= 0.0 && myaw >= 0.0);
        // Permutation invariance.
        let mut rev = frames.clone();
        rev.reverse();
        let (rx, ryaw) = evaluate_mae(&model, &params, &rev).unwrap();
        assert!((mx - rx).abs() < 1e-12 && (myaw - ryaw).abs() < 1e-12);
        // A perfect oracle scores zero.
        let oracle: Vec<LabelledFrame> = frames
            .iter()
            .map(|f| {
                let p = model.predict(&params, &f.image).unwrap();
                LabelledFrame { image: f.image.clone(), tau_x_mm: p.tau_x_mm, yaw_deg: p.yaw_deg }
            })
            .collect();
        let (ox, oyaw) = evaluate_mae(&model, &params, &oracle).unwrap();
        assert!(ox < 1e-6 && oyaw < 1e-5, "oracle mae {ox} {oyaw}");
    }

    #[test]
    fn paper_schedule_shape() {
        let cfg = PoseTrainConfig::paper();
        assert_eq!(cfg.batch_size, 256);
        assert_eq!(cfg.epochs, 250);
        assert!((cfg.lr_at(99) - 1e-4).abs() < 1e-18);
        assert!((cfg.lr_at(100) - 5e-5).abs() < 1e-18);
        assert!((cfg.lr_at(200) - 1e-5).abs() < 1e-18);
    }
}
