//! Timing probe: dataset generation plus a couple of training epochs, to
//! size the acceptance runs.

use std::time::Instant;

use tacshear::dataset::{generate_paired, generate_pose_dataset, Dataset, DatasetConfig, Split};
use tacshear::models::{train_unshear, ArchConfig, PairImages, TrainConfig, UnshearModel, Variant};
use tacshear::posenet::{train_posenet, LabelledFrame, PoseNet, PoseTrainConfig};
use tacshear::tensor::Tensor;

fn main() {
    let tmp = std::env::temp_dir().join("tacshear-probe");
    let _ = std::fs::remove_dir_all(&tmp);
    let cfg = DatasetConfig::default();

    let t0 = Instant::now();
    generate_paired(&cfg, 1, &tmp.join("paired")).unwrap();
    println!("gen paired: {:.1}s", t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    generate_pose_dataset(&cfg, 1, &tmp.join("pose")).unwrap();
    println!("gen pose: {:.1}s", t0.elapsed().as_secs_f64());

    let ds = Dataset::open(&tmp.join("paired")).unwrap();
    let to_pair = |s: Split| -> Vec<PairImages> {
        ds.paired_split(s)
            .iter()
            .map(|p| PairImages {
                sheared: Tensor::from_vec(&[64, 64], p.sheared.raster.to_f32()),
                canonical: Tensor::from_vec(&[64, 64], p.canonical.raster.to_f32()),
            })
            .collect()
    };
    let train = to_pair(Split::Train);
    let val = to_pair(Split::Val);
    println!("pairs: train {} val {}", train.len(), val.len());

    let model = UnshearModel::new(Variant::Disentangled, ArchConfig::desk());
    let tcfg = TrainConfig { epochs: 2, ..TrainConfig::default() };
    let t0 = Instant::now();
    let r = train_unshear(&model, &train, &val, &tcfg, 1).unwrap();
    println!(
        "unshear 2 epochs: {:.1}s  (l_sup {:.4} l_val {:.4})",
        t0.elapsed().as_secs_f64(),
        r.history.last().unwrap().l_sup,
        r.history.last().unwrap().l_val
    );

    let pds = Dataset::open(&tmp.join("pose")).unwrap();
    let to_lab = |s: Split| -> Vec<LabelledFrame> {
        pds.pose_split(s)
            .iter()
            .map(|f| LabelledFrame {
                image: Tensor::from_vec(&[64, 64], f.frame.raster.to_f32()),
                tau_x_mm: f.target[0] as f64,
                yaw_deg: f.target[1] as f64,
            })
            .collect()
    };
    let ptrain = to_lab(Split::Train);
    let pval = to_lab(Split::Val);
    println!("pose frames: train {} val {}", ptrain.len(), pval.len());
    let pn = PoseNet::desk();
    let pcfg = PoseTrainConfig { epochs: 2, ..PoseTrainConfig::default() };
    let t0 = Instant::now();
    let pr = train_posenet(&pn, &ptrain, &pval, &pcfg, 1).unwrap();
    println!(
        "posenet 2 epochs: {:.1}s  (val {:.5})",
        t0.elapsed().as_secs_f64(),
        pr.history.last().unwrap().1
    );
}
