use std::path::Path;
use tacshear::dataset::{Dataset, Split};
use tacshear::eval::image_tensor;
use tacshear::models::train::batch_grads;
use tacshear::models::{ArchConfig, TrainConfig, UnshearModel, Variant};
use tacshear::nn::{adam_step, AdamConfig, AdamState, Params};
use tacshear::rng::Stream;
use tacshear::tensor::Tensor;

fn main() {
    let ds = Dataset::open(Path::new("/root/artifacts/data2/paired")).unwrap();
    let pairs = ds.paired_split(Split::Train);
    let n = 32;
    let (mut xs, mut ts) = (Vec::new(), Vec::new());
    for p in &pairs[..n] {
        xs.extend_from_slice(image_tensor(&p.sheared.raster).data());
        ts.extend_from_slice(image_tensor(&p.canonical.raster).data());
    }
    let x = Tensor::from_vec(&[n, 1, 64, 64], xs);
    let t = Tensor::from_vec(&[n, 1, 64, 64], ts);

    let model = UnshearModel::new(Variant::Entangled, ArchConfig::desk());
    let mut params: Params<f32> = model.init_params(1);
    let mut adam = AdamState::new();
    let acfg = AdamConfig { lr: 1e-3, ..AdamConfig::default() };
    let cfg = TrainConfig { lambda: 0.0, l1: 0.0, l2: 0.0, ..TrainConfig::default() };
    let mut st = Stream::new(1, "onebatch");
    for it in 0..400 {
        let (grads, losses) = batch_grads(&model, &mut params, &x, &t, &cfg, &mut st).unwrap();
        adam_step(&mut params, &grads, &mut adam, &acfg).unwrap();
        if it % 100 == 99 {
            println!("iter {} train-mode l_sup {:.5}", it + 1, losses.l_sup);
        }
    }
    // eval mode on the exact same batch
    let out = model.forward_eval(&params, &x).unwrap();
    let mse: f64 = out
        .pc
        .data()
        .iter()
        .zip(t.data())
        .map(|(&a, &b)| ((a - b) as f64).powi(2))
        .sum::<f64>()
        / t.data().len() as f64;
    println!("eval-mode mse on same batch {:.5}", mse);
}
