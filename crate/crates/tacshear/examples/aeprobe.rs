use std::io::Write;
use std::path::Path;
use tacshear::dataset::{Dataset, Split};
use tacshear::eval::image_tensor;
use tacshear::models::{train_unshear, ArchConfig, PairImages, TrainConfig, UnshearModel, Variant};
use tacshear::tensor::Tensor;

fn pgm(path: &str, img: &Tensor<f32>) {
    let mut f = std::fs::File::create(path).unwrap();
    writeln!(f, "P2\n64 64\n255").unwrap();
    for v in img.data() {
        writeln!(f, "{}", (v.clamp(0.0, 1.0) * 255.0) as u8).unwrap();
    }
}

fn main() {
    let ds = Dataset::open(Path::new("/root/artifacts/data2/paired")).unwrap();
    let to_pair = |s: Split| -> Vec<PairImages> {
        ds.paired_split(s)
            .iter()
            .map(|p| PairImages {
                sheared: image_tensor(&p.canonical.raster),
                canonical: image_tensor(&p.canonical.raster),
            })
            .collect()
    };
    let train = to_pair(Split::Train);
    let val = to_pair(Split::Val);
    let model = UnshearModel::new(Variant::Entangled, ArchConfig::desk());
    let cfg = TrainConfig { epochs: 15, lr: 1e-3, lr_drops: vec![], ..TrainConfig::default() };
    let r = train_unshear(&model, &train, &val, &cfg, 1).unwrap();
    println!("train {:.4} val {:.4}", r.history.last().unwrap().l_sup, r.history.last().unwrap().l_val);
    for (tag, set) in [("train", &train), ("val", &val)] {
        for i in 0..3 {
            let p = &set[i * 37];
            let out = model.unshear(&r.params, &p.sheared).unwrap();
            pgm(&format!("/root/artifacts/ae_{tag}{i}_in.pgm"), &p.sheared);
            pgm(&format!("/root/artifacts/ae_{tag}{i}_out.pgm"), &out);
            pgm(&format!("/root/artifacts/ae_{tag}{i}_gt.pgm"), &p.canonical);
            let mse: f64 = out
                .data()
                .iter()
                .zip(p.canonical.data())
                .map(|(&a, &b)| ((a - b) as f64).powi(2))
                .sum::<f64>()
                / 4096.0;
            let (mn, mx) = out.data().iter().fold((1f32, 0f32), |(a, b), &v| (a.min(v), b.max(v)));
            println!("{tag}{i} mse {:.4} out range [{:.3},{:.3}] mean {:.3}", mse, mn, mx,
                out.data().iter().sum::<f32>() / 4096.0);
        }
    }
}
