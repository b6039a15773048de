use std::path::Path;
use tacshear::dataset::{Dataset, Split};
use tacshear::eval::image_tensor;
use tacshear::models::{train_unshear, ArchConfig, PairImages, TrainConfig, UnshearModel, Variant};

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
    let base = TrainConfig {
        epochs: 12,
        lr: 1e-3,
        lr_drops: vec![],
        lambda: 0.0,
        l1: 0.0,
        l2: 0.0,
        augment: false,
        ..TrainConfig::default()
    };
    let cases = [
        ("l1only", TrainConfig { l1: 1e-4, ..base.clone() }),
        ("l2only", TrainConfig { l2: 1e-4, ..base.clone() }),
        ("augment40", TrainConfig { augment: true, epochs: 40, ..base.clone() }),
    ];
    for (name, cfg) in cases {
        let model = UnshearModel::new(Variant::Entangled, ArchConfig::desk());
        let r = train_unshear(&model, &train, &val, &cfg, 1).unwrap();
        let h = r.history.last().unwrap();
        println!("{name}: train l_sup {:.4} val {:.4} (best epoch {})", h.l_sup, h.l_val, r.best_epoch);
    }
}
