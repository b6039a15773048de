//! Full desk-scale run: generate data, train all three networks, save
//! checkpoints, and print the headline numbers.

use std::path::Path;
use std::time::Instant;

use tacshear::dataset::{generate_paired, generate_pose_dataset, Dataset, DatasetConfig, Split};
use tacshear::eval::{image_tensor, run_table1, run_table2};
use tacshear::metrics::SsimConfig;
use tacshear::models::{
    ablate_swap_codes, train_unshear, ArchConfig, PairImages, TrainConfig, UnshearModel, Variant,
};
use tacshear::nn::ModelCheckpoint;
use tacshear::posenet::{train_posenet, LabelledFrame, PoseNet, PoseTrainConfig};

fn main() {
    let root = Path::new("/root/artifacts");
    let data = root.join("data");
    let _ = std::fs::remove_dir_all(root);
    let cfg = DatasetConfig::default();
    let t_all = Instant::now();

    generate_paired(&cfg, 1, &data.join("paired")).unwrap();
    generate_pose_dataset(&cfg, 1, &data.join("pose")).unwrap();
    println!("gen: {:.0}s", t_all.elapsed().as_secs_f64());

    let ds = Dataset::open(&data.join("paired")).unwrap();
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
    let tcfg = TrainConfig::default();

    for (variant, name) in [(Variant::Entangled, "entangled"), (Variant::Disentangled, "disentangled")] {
        let t0 = Instant::now();
        let model = UnshearModel::new(variant, ArchConfig::desk());
        let r = train_unshear(&model, &train, &val, &tcfg, 1).unwrap();
        println!(
            "{name}: {:.0}s best epoch {} val {:.5}",
            t0.elapsed().as_secs_f64(),
            r.best_epoch,
            r.history[r.best_epoch].l_val
        );
        ModelCheckpoint::new(r.params, r.adam, 1, 0).save(&root.join(name)).unwrap();
    }

    let pds = Dataset::open(&data.join("pose")).unwrap();
    let to_lab = |s: Split| -> Vec<LabelledFrame> {
        pds.pose_split(s)
            .iter()
            .map(|f| LabelledFrame {
                image: image_tensor(&f.frame.raster),
                tau_x_mm: f.target[0] as f64,
                yaw_deg: f.target[1] as f64,
            })
            .collect()
    };
    let t0 = Instant::now();
    let pn = PoseNet::desk();
    let pr = train_posenet(&pn, &to_lab(Split::Train), &to_lab(Split::Val), &PoseTrainConfig::default(), 1).unwrap();
    println!(
        "posenet: {:.0}s best epoch {} val {:.5}",
        t0.elapsed().as_secs_f64(),
        pr.best_epoch,
        pr.history[pr.best_epoch].1
    );
    ModelCheckpoint::new(pr.params, pr.adam, 1, 0).save(&root.join("posenet")).unwrap();

    // Headline tables on the held-out split.
    let em = UnshearModel::new(Variant::Entangled, ArchConfig::desk());
    let dm = UnshearModel::new(Variant::Disentangled, ArchConfig::desk());
    let ec = ModelCheckpoint::load(&root.join("entangled")).unwrap();
    let dc = ModelCheckpoint::load(&root.join("disentangled")).unwrap();
    let pc = ModelCheckpoint::load(&root.join("posenet")).unwrap();
    let pairs = ds.paired_split(Split::Test);
    let t1 = run_table1((&em, &ec.params), (&dm, &dc.params), &pairs, &SsimConfig::default()).unwrap();
    for r in &t1.rows {
        println!("table1 {:<13} {:.4}", r.label, r.overall);
    }
    let t2 = run_table2((&pn, &pc.params), (&em, &ec.params), (&dm, &dc.params), &pairs).unwrap();
    for r in &t2.rows {
        println!("table2 {:<13} tau_x {:.3} yaw {:.3}", r.label, r.mae_tau_x_mm, r.mae_yaw_deg);
    }
    let test_pairs = to_pair(Split::Test);
    let ab = ablate_swap_codes(&dm, &dc.params, &test_pairs, &SsimConfig::default()).unwrap();
    println!(
        "ablation dc mse {:.5}->{:.5} ssim {:.3}->{:.3} ds mse {:.5}->{:.5}",
        ab.dc_mse, ab.dc_mse_swapped, ab.dc_ssim, ab.dc_ssim_swapped, ab.ds_mse, ab.ds_mse_swapped
    );
    println!("total: {:.0}s", t_all.elapsed().as_secs_f64());
}
