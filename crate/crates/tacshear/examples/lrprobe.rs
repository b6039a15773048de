use tacshear::dataset::{Dataset, Split};
use tacshear::eval::image_tensor;
use tacshear::metrics::{ms_ssim, SsimConfig};
use tacshear::models::{train_unshear, ArchConfig, PairImages, TrainConfig, UnshearModel, Variant};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lr: f64 = args[1].parse().unwrap();
    let epochs: usize = args[2].parse().unwrap();
    let ds = Dataset::open(std::path::Path::new("/root/artifacts/data/paired")).unwrap();
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
    let cfg = TrainConfig { epochs, lr, lr_drops: vec![], ..TrainConfig::default() };
    let r = train_unshear(&model, &train, &val, &cfg, 1).unwrap();
    for h in &r.history {
        println!("epoch {} l_sup {:.4} val {:.4}", h.epoch, h.l_sup, h.l_val);
    }
    let pairs = ds.paired_split(Split::Test);
    let cfg_s = SsimConfig::default();
    let mut s = 0.0;
    let n = 40.min(pairs.len());
    for p in &pairs[..n] {
        let out = model.unshear(&r.params, &image_tensor(&p.sheared.raster)).unwrap();
        s += ms_ssim(&image_tensor(&p.canonical.raster), &out, &cfg_s);
    }
    println!("lr {lr} epochs {epochs}: test ssim {:.3}", s / n as f64);
}
