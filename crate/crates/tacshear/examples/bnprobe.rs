use std::path::Path;
use tacshear::dataset::{Dataset, Split};
use tacshear::eval::image_tensor;
use tacshear::metrics::{ms_ssim, SsimConfig};
use tacshear::models::{train_unshear, ArchConfig, PairImages, TrainConfig, UnshearModel, Variant};
use tacshear::tensor::Tensor;

fn main() {
    let ds = Dataset::open(Path::new("/root/artifacts/data2/paired")).unwrap();
    let to_pair = |s: Split| -> Vec<PairImages> {
        ds.paired_split(s)
            .iter()
            .map(|p| PairImages {
                sheared: image_tensor(&p.sheared.raster),
                canonical: image_tensor(&p.canonical.raster),
            })
            .collect()
    };
    let train = to_pair(Split::Train);
    let val = to_pair(Split::Val);
    let model = UnshearModel::new(Variant::Entangled, ArchConfig::desk());
    let cfg = TrainConfig { epochs: 10, lr: 1e-3, lr_drops: vec![], ..TrainConfig::default() };
    let r = train_unshear(&model, &train, &val, &cfg, 1).unwrap();
    println!("last train l_sup {:.4} val {:.4}", r.history.last().unwrap().l_sup, r.history.last().unwrap().l_val);

    let test = to_pair(Split::Test);
    let n = 64.min(test.len());
    let cfg_s = SsimConfig::default();

    // eval mode, per image
    let (mut mse_e, mut ssim_e) = (0.0, 0.0);
    for p in &test[..n] {
        let out = model.unshear(&r.params, &p.sheared).unwrap();
        mse_e += out
            .data()
            .iter()
            .zip(p.canonical.data())
            .map(|(&a, &b)| ((a - b) as f64).powi(2))
            .sum::<f64>()
            / out.data().len() as f64;
        ssim_e += ms_ssim(&p.canonical, &out, &cfg_s);
    }
    println!("eval-mode  test mse {:.4} ssim {:.3}", mse_e / n as f64, ssim_e / n as f64);

    // train mode (batch stats) on the same test batch
    let side = 64;
    let mut xs = Vec::new();
    for p in &test[..n] {
        xs.extend_from_slice(p.sheared.data());
    }
    let x = Tensor::from_vec(&[n, 1, side, side], xs);
    let mut params = r.params.clone();
    let (trunk, _) = model.encoder.forward_train(&mut params, &x).unwrap();
    let (z, _) = model.head_p.forward_train(&mut params, &trunk).unwrap();
    let (pc, _) = model.dec_c.forward_train(&mut params, &z).unwrap();
    let plane = side * side;
    let (mut mse_t, mut ssim_t) = (0.0, 0.0);
    for (i, p) in test[..n].iter().enumerate() {
        let out = Tensor::from_vec(&[side, side], pc.data()[i * plane..(i + 1) * plane].to_vec());
        mse_t += out
            .data()
            .iter()
            .zip(p.canonical.data())
            .map(|(&a, &b)| ((a - b) as f64).powi(2))
            .sum::<f64>()
            / plane as f64;
        ssim_t += ms_ssim(&p.canonical, &out, &cfg_s);
    }
    println!("batch-stat test mse {:.4} ssim {:.3}", mse_t / n as f64, ssim_t / n as f64);
}
