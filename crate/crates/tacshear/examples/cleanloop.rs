use std::path::Path;
use tacshear::dataset::{Dataset, Split};
use tacshear::eval::image_tensor;
use tacshear::models::train::batch_grads;
use tacshear::models::{ArchConfig, TrainConfig, UnshearModel, Variant};
use tacshear::nn::{adam_step, AdamConfig, AdamState, Params};
use tacshear::rng::Stream;
use tacshear::tensor::Tensor;

fn stack(pairs: &[(Tensor<f32>, Tensor<f32>)], idx: &[usize]) -> (Tensor<f32>, Tensor<f32>) {
    let n = idx.len();
    let (mut xs, mut ts) = (Vec::new(), Vec::new());
    for &i in idx {
        xs.extend_from_slice(pairs[i].0.data());
        ts.extend_from_slice(pairs[i].1.data());
    }
    (Tensor::from_vec(&[n, 1, 64, 64], xs), Tensor::from_vec(&[n, 1, 64, 64], ts))
}

fn mse(a: &Tensor<f32>, b: &Tensor<f32>) -> f64 {
    a.data().iter().zip(b.data()).map(|(&x, &y)| ((x - y) as f64).powi(2)).sum::<f64>() / a.data().len() as f64
}

fn main() {
    let epochs: usize = std::env::args().nth(1).unwrap().parse().unwrap();
    let ds = Dataset::open(Path::new("/root/artifacts/data2/paired")).unwrap();
    let load = |s: Split| -> Vec<(Tensor<f32>, Tensor<f32>)> {
        ds.paired_split(s)
            .iter()
            .map(|p| (image_tensor(&p.sheared.raster), image_tensor(&p.canonical.raster)))
            .collect()
    };
    let train = load(Split::Train);
    let val = load(Split::Val);

    let model = UnshearModel::new(Variant::Entangled, ArchConfig::desk());
    let mut params: Params<f32> = model.init_params(1);
    let mut adam = AdamState::new();
    let acfg = AdamConfig { lr: 1e-3, ..AdamConfig::default() };
    let cfg = TrainConfig { lambda: 0.0, l1: 0.0, l2: 0.0, augment: false, ..TrainConfig::default() };
    let mut st = Stream::new(1, "clean");
    let mut order: Vec<usize> = (0..train.len()).collect();
    for ep in 0..epochs {
        // fisher-yates with the same stream
        for i in (1..order.len()).rev() {
            let j = st.below(i + 1);
            order.swap(i, j);
        }
        let mut tot = 0.0;
        let mut nb = 0;
        for chunk in order.chunks(32) {
            let (x, t) = stack(&train, chunk);
            let (grads, losses) = batch_grads(&model, &mut params, &x, &t, &cfg, &mut st).unwrap();
            adam_step(&mut params, &grads, &mut adam, &acfg).unwrap();
            tot += losses.l_sup;
            nb += 1;
        }
        if ep % 5 == 4 || ep == epochs - 1 {
            println!("epoch {} train-mode l_sup {:.4}", ep + 1, tot / nb as f64);
        }
    }

    // final params, all modes
    let idx: Vec<usize> = (0..128).collect();
    let (xt, tt) = stack(&train, &idx);
    let (xv, tv) = stack(&val, &idx);
    let ev_t = model.forward_eval(&params, &xt).unwrap().pc;
    let ev_v = model.forward_eval(&params, &xv).unwrap().pc;
    println!("final eval-mode:  train mse {:.4}  val mse {:.4}", mse(&ev_t, &tt), mse(&ev_v, &tv));
    let mut pc = params.clone();
    let (tr_t, _) = model.encoder.forward_train(&mut pc, &xt).unwrap();
    let (z, _) = model.head_p.forward_train(&mut pc, &tr_t).unwrap();
    let (bt, _) = model.dec_c.forward_train(&mut pc, &z).unwrap();
    let mut pc2 = params.clone();
    let (tr_v, _) = model.encoder.forward_train(&mut pc2, &xv).unwrap();
    let (z2, _) = model.head_p.forward_train(&mut pc2, &tr_v).unwrap();
    let (bv, _) = model.dec_c.forward_train(&mut pc2, &z2).unwrap();
    println!("final batch-stat: train mse {:.4}  val mse {:.4}", mse(&bt, &tt), mse(&bv, &tv));
}
