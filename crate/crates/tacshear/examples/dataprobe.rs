use std::path::Path;
use tacshear::dataset::{generate_paired, Dataset, DatasetConfig, Split};
use tacshear::eval::image_tensor;
use tacshear::metrics::{ms_ssim, SsimConfig};
use tacshear::models::{train_unshear, ArchConfig, PairImages, TrainConfig, UnshearModel, Variant};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lr: f64 = args[1].parse().unwrap();
    let epochs: usize = args[2].parse().unwrap();
    let dir = Path::new("/root/artifacts/data2/paired");
    if !dir.join("manifest.txt").exists() {
        let cfg = DatasetConfig {
            poses_per_shape: 150,
            canonical_per_pose: 2,
            sheared_per_pose: 4,
            ..DatasetConfig::default()
        };
        let t = std::time::Instant::now();
        generate_paired(&cfg, 11, dir).unwrap();
        println!("gen: {}s", t.elapsed().as_secs());
    }
    let ds = Dataset::open(dir).unwrap();
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
    println!("train {} val {}", train.len(), val.len());
    let model = UnshearModel::new(Variant::Entangled, ArchConfig::desk());
    let cfg = TrainConfig { epochs, lr, lr_drops: vec![], ..TrainConfig::default() };
    let t = std::time::Instant::now();
    let r = train_unshear(&model, &train, &val, &cfg, 1).unwrap();
    println!("train: {}s", t.elapsed().as_secs());
    for h in r.history.iter().step_by(4) {
        println!("epoch {} l_sup {:.4} val {:.4}", h.epoch, h.l_sup, h.l_val);
    }
    let pairs = ds.paired_split(Split::Test);
    let cfg_s = SsimConfig::default();
    let (mut s_out, mut s_in) = (0.0, 0.0);
    let n = 40.min(pairs.len());
    for p in &pairs[..n] {
        let canon = image_tensor(&p.canonical.raster);
        let out = model.unshear(&r.params, &image_tensor(&p.sheared.raster)).unwrap();
        s_out += ms_ssim(&canon, &out, &cfg_s);
        s_in += ms_ssim(&canon, &image_tensor(&p.sheared.raster), &cfg_s);
    }
    println!(
        "lr {lr} epochs {epochs}: test ssim ent {:.3} sheared {:.3}",
        s_out / n as f64,
        s_in / n as f64
    );
}
