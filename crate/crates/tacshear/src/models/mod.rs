//! Unshearing models: entangled and disentangled image-to-image networks,
//! their objectives, training loop, and the code-swap ablation.

pub mod ablate;
pub mod arch;
pub mod check;
pub mod losses;
pub mod train;

pub use ablate::{ablate_swap_codes, AblationReport};
pub use check::{gradcheck_suite, GradcheckSummary};
pub use arch::{concat_channels, split_channels, ArchConfig, UnshearModel, UnshearOutput, Variant};
pub use losses::{loss_patch, loss_rec, loss_sup, total_objectives};
pub use train::{history_csv, train_unshear, EpochStats, PairImages, TrainConfig, TrainResult};

#[cfg(test)]
mod tests {
    use super::train::batch_grads;
    use super::*;
    use crate::nn::Params;
    use crate::rng::Stream;
    use crate::tensor::Tensor;

    fn tiny_pairs(n: usize, seed: u64, side: usize) -> Vec<PairImages> {
        let mut st = Stream::new(seed, "pairs");
        (0..n)
            .map(|_| {
                let img = |st: &mut Stream| {
                    Tensor::from_vec(&[side, side], (0..side * side).map(|_| st.uniform() as f32).collect())
                };
                PairImages { sheared: img(&mut st), canonical: img(&mut st) }
            })
            .collect()
    }

    fn tiny_cfg() -> TrainConfig {
        TrainConfig { epochs: 2, batch_size: 4, n_crops: 4, crop_size: 4, ..TrainConfig::default() }
    }

    fn stack(pairs: &[PairImages]) -> (Tensor<f64>, Tensor<f64>) {
        let side = pairs[0].sheared.shape()[0];
        let mut xs = Vec::new();
        let mut ts = Vec::new();
        for p in pairs {
            xs.extend(p.sheared.data().iter().map(|&v| v as f64));
            ts.extend(p.canonical.data().iter().map(|&v| v as f64));
        }
        (Tensor::from_vec(&[pairs.len(), 1, side, side], xs), Tensor::from_vec(&[pairs.len(), 1, side, side], ts))
    }

    #[test]
    fn objective_decomposition_matches_finite_differences() {
        // The combined gradient of each encoder parameter must equal the
        // central finite difference of L_rec + L_sup + lambda*L_patch.
        let model = UnshearModel::new(Variant::Disentangled, ArchConfig::tiny());
        let pairs = tiny_pairs(2, 3, 16);
        let (x, t) = stack(&pairs);
        let cfg = TrainConfig { l1: 0.0, l2: 0.0, n_crops: 3, crop_size: 4, ..tiny_cfg() };
        let init: Params<f64> = model.init_params(5);

        let mut work = init.clone();
        let (grads, _) = batch_grads(&model, &mut work, &x, &t, &cfg, &mut Stream::new(1, "crops")).unwrap();

        let loss_at = |p: &Params<f64>, prefix: &str| {
            // Fresh clone per evaluation; batch statistics only.
            let mut q = p.clone();
            let (_, losses) = batch_grads(&model, &mut q, &x, &t, &cfg, &mut Stream::new(1, "crops")).unwrap();
            match prefix {
                "enc" | "zp" | "zs" => losses.l_rec + losses.l_sup + cfg.lambda * losses.l_patch,
                "dc" => losses.l_sup + cfg.lambda * losses.l_patch,
                "ds" => losses.l_rec,
                other => panic!("unknown prefix {other}"),
            }
        };

        let h = 1e-5;
        let mut checked = 0;
        for (name, g) in &grads {
            let prefix = name.split('.').next().unwrap();
            for idx in (0..g.len()).step_by((g.len() / 3).max(1)) {
                let mut plus = init.clone();
                plus.tensors.get_mut(name).unwrap().data_mut()[idx] += h;
                let mut minus = init.clone();
                minus.tensors.get_mut(name).unwrap().data_mut()[idx] -= h;
                let fd = (loss_at(&plus, prefix) - loss_at(&minus, prefix)) / (2.0 * h);
                let analytic = g.data()[idx];
                let denom = fd.abs().max(analytic.abs()).max(1e-4);
                assert!(
                    ((fd - analytic) / denom).abs() < 1e-5,
                    "{name}[{idx}]: fd {fd} vs analytic {analytic}"
                );
                checked += 1;
            }
        }
        assert!(checked > 30, "too few parameters sampled: {checked}");
    }

    #[test]
    fn training_is_deterministic() {
        let model = UnshearModel::new(Variant::Disentangled, ArchConfig::tiny());
        let train = tiny_pairs(8, 1, 16);
        let val = tiny_pairs(4, 2, 16);
        let cfg = tiny_cfg();
        let a = train_unshear(&model, &train, &val, &cfg, 99).unwrap();
        let b = train_unshear(&model, &train, &val, &cfg, 99).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.history, b.history);
        assert_eq!(a.best_epoch, b.best_epoch);
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let model = UnshearModel::new(Variant::Entangled, ArchConfig::tiny());
        let train = tiny_pairs(4, 1, 16);
        let val = tiny_pairs(2, 2, 16);
        let cfg = TrainConfig { epochs: 0, ..tiny_cfg() };
        let result = train_unshear(&model, &train, &val, &cfg, 123).unwrap();
        let init: Params<f32> = model.init_params(123);
        assert_eq!(result.params, init);
        assert!(result.history.is_empty());
    }

    #[test]
    fn smoke_loss_decreases() {
        // Identity-ish task: canonical equals sheared, so L_sup can fall
        // quickly even in two epochs.
        let mut pairs = tiny_pairs(16, 7, 16);
        for p in &mut pairs {
            p.canonical = p.sheared.clone();
        }
        let model = UnshearModel::new(Variant::Disentangled, ArchConfig::tiny());
        let cfg = TrainConfig { epochs: 2, augment: false, lr: 1e-3, ..tiny_cfg() };
        let result = train_unshear(&model, &pairs, &pairs[..4].to_vec(), &cfg, 11).unwrap();
        assert!(
            result.history[1].l_sup < result.history[0].l_sup,
            "L_sup did not decrease: {:?}",
            result.history
        );
    }

    #[test]
    fn lr_schedule_factors() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.lr_at(0), 1e-4);
        assert_eq!(cfg.lr_at(39), 1e-4);
        assert!((cfg.lr_at(40) - 2e-5).abs() < 1e-18);
        assert!((cfg.lr_at(79) - 2e-5).abs() < 1e-18);
        assert!((cfg.lr_at(80) - 1e-5).abs() < 1e-18);
        assert!((cfg.lr_at(99) - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn ablation_requires_disentangled_and_reports_fields() {
        let pairs = tiny_pairs(2, 5, 16);
        let ssim = crate::metrics::SsimConfig {
            scales: 2,
            window: 5,
            weights: vec![0.5, 0.5],
            ..crate::metrics::SsimConfig::default()
        };
        let ent = UnshearModel::new(Variant::Entangled, ArchConfig::tiny());
        let ent_params: Params<f32> = ent.init_params(1);
        assert!(ablate_swap_codes(&ent, &ent_params, &pairs, &ssim).is_err());

        let dis = UnshearModel::new(Variant::Disentangled, ArchConfig::tiny());
        let dis_params: Params<f32> = dis.init_params(1);
        let report = ablate_swap_codes(&dis, &dis_params, &pairs, &ssim).unwrap();
        assert_eq!(report.samples, 2);
        for v in [report.dc_mse, report.dc_mse_swapped, report.ds_mse, report.ds_mse_swapped] {
            assert!(v.is_finite() && v >= 0.0);
        }
    }
}
