//! Command-line surface: data generation, training, evaluation, ablation,
//! exploration, reconstruction, rendering, gradient checking.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tacshear::dataset::{generate_paired, generate_pose_dataset, Dataset, DatasetConfig, Split};
use tacshear::eval::{
    image_tensor, prepare_run_dir, run_table1, run_table2, write_run, ExperimentReport,
};
use tacshear::geometry::{fuse_object, heightmap_pgm, points_csv, GridSpec};
use tacshear::metrics::SsimConfig;
use tacshear::models::{
    ablate_swap_codes, gradcheck_suite, history_csv, train_unshear, ArchConfig, PairImages,
    TrainConfig, UnshearModel, Variant,
};
use tacshear::nn::ModelCheckpoint;
use tacshear::posenet::{train_posenet, LabelledFrame, PoseNet, PoseTrainConfig};
use tacshear::servo::{
    explore, ExploreConfig, NetPredictor, NetUnshearer, OraclePredictor, OracleUnshearer,
    PosePredictor, Unshearer,
};
use tacshear::sim::{
    sense_slide, BinaryImage, ContactPose, SensorConfig, ShapeKind, ShearPerturbation,
    StimulusShape,
};

#[derive(Parser)]
#[command(name = "tacshear", version, about = "Simulated soft tactile sensing: shear disentanglement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Smallest usable dataset, for smoke tests.
    Tiny,
    /// Desk-scale defaults used by the acceptance runs.
    Desk,
    /// The full-size protocol; slow.
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Disk,
    Clover,
    Teardrop,
}

impl ShapeArg {
    fn kind(self) -> ShapeKind {
        match self {
            ShapeArg::Disk => ShapeKind::Disk,
            ShapeArg::Clover => ShapeKind::Clover,
            ShapeArg::Teardrop => ShapeKind::Teardrop,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Entangled,
    Disentangled,
}

impl VariantArg {
    fn variant(self) -> Variant {
        match self {
            VariantArg::Entangled => Variant::Entangled,
            VariantArg::Disentangled => Variant::Disentangled,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the paired tap/slide dataset and the pose-labelled dataset.
    GenData {
        #[arg(long, value_enum, default_value = "desk")]
        preset: Preset,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Train one unshearing model on a paired dataset.
    TrainUnshear {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value = "train-unshear")]
        run: String,
    },
    /// Train the pose regressor on a pose-labelled dataset.
    TrainPose {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 60)]
        epochs: usize,
        #[arg(long, default_value = "train-pose")]
        run: String,
    },
    /// Similarity table on the held-out paired split.
    EvalSsim {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        entangled: PathBuf,
        #[arg(long)]
        disentangled: PathBuf,
        #[arg(long, default_value = "eval-ssim")]
        run: String,
    },
    /// Pose-error table on the held-out paired split.
    EvalPose {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        posenet: PathBuf,
        #[arg(long)]
        entangled: PathBuf,
        #[arg(long)]
        disentangled: PathBuf,
        #[arg(long, default_value = "eval-pose")]
        run: String,
    },
    /// Latent code-swap ablation of the disentangled model.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        disentangled: PathBuf,
        #[arg(long, default_value = "ablate")]
        run: String,
    },
    /// Contour-following exploration; writes the trajectory log.
    Explore {
        #[arg(long, value_enum)]
        shape: ShapeArg,
        /// Use ground truth instead of trained models.
        #[arg(long, default_value_t = false)]
        oracle: bool,
        #[arg(long)]
        unshear: Option<PathBuf>,
        #[arg(long)]
        posenet: Option<PathBuf>,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long, default_value = "explore")]
        run: String,
    },
    /// Explore, then fuse the captured local surfaces into one height map.
    Reconstruct {
        #[arg(long, value_enum)]
        shape: ShapeArg,
        #[arg(long, default_value_t = false)]
        oracle: bool,
        #[arg(long)]
        unshear: Option<PathBuf>,
        #[arg(long)]
        posenet: Option<PathBuf>,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long, default_value = "reconstruct")]
        run: String,
    },
    /// Render one tactile frame to a PGM image.
    Render {
        #[arg(long, value_enum)]
        shape: ShapeArg,
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        #[arg(long, default_value_t = 2.0)]
        depth: f64,
        #[arg(long, default_value_t = 0.0)]
        yaw: f64,
        #[arg(long, default_value_t = 0.0)]
        shear_x: f64,
        #[arg(long, default_value_t = 0.0)]
        shear_y: f64,
        #[arg(long, default_value = "frame.pgm")]
        out: PathBuf,
    },
    /// Verify analytic gradients against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn dataset_preset(preset: Preset) -> DatasetConfig {
    match preset {
        Preset::Desk => DatasetConfig::default(),
        Preset::Paper => DatasetConfig::paper_scale(),
        Preset::Tiny => DatasetConfig {
            poses_per_shape: 4,
            canonical_per_pose: 1,
            sheared_per_pose: 3,
            pose_samples_per_shape: 12,
            ..DatasetConfig::default()
        },
    }
}

fn load_pairs(dir: &Path, split: Split) -> Result<Vec<PairImages>, String> {
    let ds = Dataset::open(dir).map_err(|e| e.to_string())?;
    let pairs = ds.paired_split(split);
    if pairs.is_empty() {
        return Err(format!("no {} pairs in {}", split.name(), dir.display()));
    }
    Ok(pairs
        .iter()
        .map(|p| PairImages {
            sheared: image_tensor(&p.sheared.raster),
            canonical: image_tensor(&p.canonical.raster),
        })
        .collect())
}

fn load_labelled(dir: &Path, split: Split) -> Result<Vec<LabelledFrame>, String> {
    let ds = Dataset::open(dir).map_err(|e| e.to_string())?;
    let frames = ds.pose_split(split);
    if frames.is_empty() {
        return Err(format!("no {} pose samples in {}", split.name(), dir.display()));
    }
    Ok(frames
        .iter()
        .map(|s| LabelledFrame {
            image: image_tensor(&s.frame.raster),
            tau_x_mm: s.target[0] as f64,
            yaw_deg: s.target[1] as f64,
        })
        .collect())
}

fn load_checkpoint(dir: &Path) -> Result<ModelCheckpoint, String> {
    ModelCheckpoint::load(dir).map_err(|e| format!("{}: {e}", dir.display()))
}

fn load_unshear(dir: &Path, variant: Variant) -> Result<(UnshearModel, ModelCheckpoint), String> {
    let ckpt = load_checkpoint(dir)?;
    Ok((UnshearModel::new(variant, ArchConfig::desk()), ckpt))
}

fn write_pgm(img: &BinaryImage, path: &Path) -> std::io::Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    bytes.extend(img.pixels.iter().map(|&p| if p != 0 { 255u8 } else { 0u8 }));
    std::fs::write(path, bytes)
}

/// Run exploration with either ground truth or loaded checkpoints.
fn run_explore(
    shape: ShapeArg,
    oracle: bool,
    unshear: &Option<PathBuf>,
    posenet: &Option<PathBuf>,
    steps: usize,
    capture: bool,
) -> Result<(tacshear::servo::ExploreOutcome, StimulusShape), String> {
    let sensor = SensorConfig::default();
    let cfg = ExploreConfig { capture_surfaces: capture, ..ExploreConfig::default() };
    let stimulus = StimulusShape::by_kind(shape.kind());
    let outcome = if oracle {
        explore(&stimulus, 0.0, &OracleUnshearer, &OraclePredictor, &sensor, &cfg, steps)
    } else {
        let u_dir = unshear.as_ref().ok_or("--unshear required unless --oracle is set")?;
        let p_dir = posenet.as_ref().ok_or("--posenet required unless --oracle is set")?;
        let (u_model, u_ckpt) = load_unshear(u_dir, Variant::Disentangled)?;
        let p_model = PoseNet::desk();
        let p_ckpt = load_checkpoint(p_dir)?;
        let unshearer = NetUnshearer { model: &u_model, params: &u_ckpt.params };
        let predictor = NetPredictor { model: &p_model, params: &p_ckpt.params };
        explore(&stimulus, 0.0, &unshearer as &dyn Unshearer, &predictor as &dyn PosePredictor, &sensor, &cfg, steps)
    }
    .map_err(|e| e.to_string())?;
    Ok((outcome, stimulus))
}

fn run(cmd: Command) -> Result<(), String> {
    match cmd {
        Command::GenData { preset, seed, out } => {
            let cfg = dataset_preset(preset);
            let paired_dir = out.join("paired");
            let pose_dir = out.join("pose");
            generate_paired(&cfg, seed, &paired_dir).map_err(|e| e.to_string())?;
            generate_pose_dataset(&cfg, seed, &pose_dir).map_err(|e| e.to_string())?;
            for (name, dir) in [("paired", &paired_dir), ("pose", &pose_dir)] {
                let bytes = std::fs::read(dir.join("samples.bin")).map_err(|e| e.to_string())?;
                println!("{name} dataset hash: {:016x} ({} bytes)", fnv1a(&bytes), bytes.len());
            }
            Ok(())
        }
        Command::TrainUnshear { data, variant, seed, epochs, run } => {
            let train = load_pairs(&data, Split::Train)?;
            let val = load_pairs(&data, Split::Val)?;
            let model = UnshearModel::new(variant.variant(), ArchConfig::desk());
            let cfg = TrainConfig { epochs, ..TrainConfig::default() };
            let result = train_unshear(&model, &train, &val, &cfg, seed).map_err(|e| e.to_string())?;
            let dir = prepare_run_dir(&run).map_err(|e| e.to_string())?;
            let ckpt_dir = dir.join("artifacts").join("checkpoint");
            ModelCheckpoint::new(result.params, result.adam, seed, 0)
                .save(&ckpt_dir)
                .map_err(|e| e.to_string())?;
            std::fs::write(dir.join("artifacts").join("history.csv"), history_csv(&result.history))
                .map_err(|e| e.to_string())?;
            let config = format!(
                "command=train-unshear\ndata={}\nvariant={}\nseed={seed}\nepochs={epochs}\nbest_epoch={}\n",
                data.display(),
                match variant.variant() {
                    Variant::Entangled => "entangled",
                    Variant::Disentangled => "disentangled",
                },
                result.best_epoch
            );
            write_run(&dir, &config, &ExperimentReport::default()).map_err(|e| e.to_string())?;
            println!("checkpoint: {}", ckpt_dir.display());
            Ok(())
        }
        Command::TrainPose { data, seed, epochs, run } => {
            let train = load_labelled(&data, Split::Train)?;
            let val = load_labelled(&data, Split::Val)?;
            let model = PoseNet::desk();
            let cfg = PoseTrainConfig { epochs, ..PoseTrainConfig::default() };
            let result = train_posenet(&model, &train, &val, &cfg, seed).map_err(|e| e.to_string())?;
            let dir = prepare_run_dir(&run).map_err(|e| e.to_string())?;
            let ckpt_dir = dir.join("artifacts").join("checkpoint");
            ModelCheckpoint::new(result.params, result.adam, seed, 0)
                .save(&ckpt_dir)
                .map_err(|e| e.to_string())?;
            let config = format!(
                "command=train-pose\ndata={}\nseed={seed}\nepochs={epochs}\nbest_epoch={}\n",
                data.display(),
                result.best_epoch
            );
            write_run(&dir, &config, &ExperimentReport::default()).map_err(|e| e.to_string())?;
            println!("checkpoint: {}", ckpt_dir.display());
            Ok(())
        }
        Command::EvalSsim { data, entangled, disentangled, run } => {
            let ds = Dataset::open(&data).map_err(|e| e.to_string())?;
            let pairs = ds.paired_split(Split::Test);
            if pairs.is_empty() {
                return Err("empty test split".into());
            }
            let (em, ec) = load_unshear(&entangled, Variant::Entangled)?;
            let (dm, dc) = load_unshear(&disentangled, Variant::Disentangled)?;
            let t1 = run_table1((&em, &ec.params), (&dm, &dc.params), &pairs, &SsimConfig::default())
                .map_err(|e| e.to_string())?;
            for row in &t1.rows {
                println!("ssim {:<13} overall {:.4} ({} samples)", row.label, row.overall, row.samples);
            }
            let report = ExperimentReport { table1: Some(t1), ..ExperimentReport::default() };
            let dir = prepare_run_dir(&run).map_err(|e| e.to_string())?;
            let config = format!(
                "command=eval-ssim\ndata={}\nentangled={}\ndisentangled={}\n",
                data.display(),
                entangled.display(),
                disentangled.display()
            );
            write_run(&dir, &config, &report).map_err(|e| e.to_string())?;
            Ok(())
        }
        Command::EvalPose { data, posenet, entangled, disentangled, run } => {
            let ds = Dataset::open(&data).map_err(|e| e.to_string())?;
            let pairs = ds.paired_split(Split::Test);
            if pairs.is_empty() {
                return Err("empty test split".into());
            }
            let (em, ec) = load_unshear(&entangled, Variant::Entangled)?;
            let (dm, dc) = load_unshear(&disentangled, Variant::Disentangled)?;
            let pn = PoseNet::desk();
            let pc = load_checkpoint(&posenet)?;
            let t2 = run_table2((&pn, &pc.params), (&em, &ec.params), (&dm, &dc.params), &pairs)
                .map_err(|e| e.to_string())?;
            for row in &t2.rows {
                println!(
                    "mae {:<13} tau_x {:.3} mm  yaw {:.3} deg ({} samples)",
                    row.label, row.mae_tau_x_mm, row.mae_yaw_deg, row.samples
                );
            }
            let report = ExperimentReport { table2: Some(t2), ..ExperimentReport::default() };
            let dir = prepare_run_dir(&run).map_err(|e| e.to_string())?;
            let config = format!(
                "command=eval-pose\ndata={}\nposenet={}\nentangled={}\ndisentangled={}\n",
                data.display(),
                posenet.display(),
                entangled.display(),
                disentangled.display()
            );
            write_run(&dir, &config, &report).map_err(|e| e.to_string())?;
            Ok(())
        }
        Command::Ablate { data, disentangled, run } => {
            let pairs = load_pairs(&data, Split::Test)?;
            let (dm, dc) = load_unshear(&disentangled, Variant::Disentangled)?;
            let report = ablate_swap_codes(&dm, &dc.params, &pairs, &SsimConfig::default())
                .map_err(|e| e.to_string())?;
            println!(
                "dc mse {:.5} -> {:.5}  ssim {:.3} -> {:.3}",
                report.dc_mse, report.dc_mse_swapped, report.dc_ssim, report.dc_ssim_swapped
            );
            println!("ds mse {:.5} -> {:.5}", report.ds_mse, report.ds_mse_swapped);
            let full = ExperimentReport { ablation: Some(report), ..ExperimentReport::default() };
            let dir = prepare_run_dir(&run).map_err(|e| e.to_string())?;
            let config = format!("command=ablate\ndata={}\ndisentangled={}\n", data.display(), disentangled.display());
            write_run(&dir, &config, &full).map_err(|e| e.to_string())?;
            Ok(())
        }
        Command::Explore { shape, oracle, unshear, posenet, steps, run } => {
            let (outcome, _) = run_explore(shape, oracle, &unshear, &posenet, steps, false)?;
            let dir = prepare_run_dir(&run).map_err(|e| e.to_string())?;
            let traj = dir.join("artifacts").join("trajectory.csv");
            std::fs::write(&traj, outcome.log.csv()).map_err(|e| e.to_string())?;
            let report = ExperimentReport {
                artifacts: vec!["trajectory.csv".into()],
                ..ExperimentReport::default()
            };
            let config = format!(
                "command=explore\noracle={oracle}\nsteps={steps}\nclosed={}\naborted={}\n",
                outcome.log.closed,
                outcome.log.aborted.as_deref().unwrap_or("none")
            );
            write_run(&dir, &config, &report).map_err(|e| e.to_string())?;
            println!(
                "steps {}  closed {}  aborted {}",
                outcome.log.rows.len(),
                outcome.log.closed,
                outcome.log.aborted.as_deref().unwrap_or("none")
            );
            if !outcome.log.closed {
                return Err("exploration did not close the loop".into());
            }
            Ok(())
        }
        Command::Reconstruct { shape, oracle, unshear, posenet, steps, run } => {
            let (outcome, stimulus) = run_explore(shape, oracle, &unshear, &posenet, steps, true)?;
            if outcome.surfaces.is_empty() {
                return Err("no surfaces captured".into());
            }
            // Cover the whole object plus the sensor aperture.
            let reach = stimulus
                .boundary()
                .iter()
                .fold(0.0f64, |m, p| m.max(p.norm()));
            let half_extent = reach + SensorConfig::default().aperture_radius_mm + 2.0;
            let grid = GridSpec::new(half_extent, 97);
            let fused = fuse_object(&outcome.surfaces, &grid).map_err(|e| e.to_string())?;
            let dir = prepare_run_dir(&run).map_err(|e| e.to_string())?;
            let art = dir.join("artifacts");
            std::fs::write(art.join("trajectory.csv"), outcome.log.csv()).map_err(|e| e.to_string())?;
            std::fs::write(art.join("points.csv"), points_csv(&fused.grid, &fused.heights, Some(&fused.support)))
                .map_err(|e| e.to_string())?;
            let (pgm, sidecar) = heightmap_pgm(&fused.grid, &fused.heights);
            std::fs::write(art.join("heightmap.pgm"), pgm).map_err(|e| e.to_string())?;
            std::fs::write(art.join("heightmap.txt"), sidecar).map_err(|e| e.to_string())?;
            let report = ExperimentReport {
                artifacts: vec![
                    "trajectory.csv".into(),
                    "points.csv".into(),
                    "heightmap.pgm".into(),
                    "heightmap.txt".into(),
                ],
                ..ExperimentReport::default()
            };
            let config = format!(
                "command=reconstruct\noracle={oracle}\nsteps={steps}\nclosed={}\nsurfaces={}\nhalf_extent_mm={half_extent}\n",
                outcome.log.closed,
                outcome.surfaces.len()
            );
            write_run(&dir, &config, &report).map_err(|e| e.to_string())?;
            println!("surfaces {}  closed {}", outcome.surfaces.len(), outcome.log.closed);
            Ok(())
        }
        Command::Render { shape, x, y, depth, yaw, shear_x, shear_y, out } => {
            let sensor = SensorConfig::default();
            let stimulus = StimulusShape::by_kind(shape.kind());
            let pose = ContactPose::new(x, y, depth, yaw);
            let shear = ShearPerturbation::new(shear_x, shear_y);
            let frame = sense_slide(&stimulus, &pose, &shear, 0, &sensor).map_err(|e| e.to_string())?;
            write_pgm(&frame.raster, &out).map_err(|e| e.to_string())?;
            println!("wrote {} ({} clipped markers)", out.display(), frame.clipped_markers);
            Ok(())
        }
        Command::Gradcheck { seed } => {
            let summary = gradcheck_suite(seed).map_err(|e| e.to_string())?;
            for (name, err) in &summary.cases {
                println!("{name:<20} {err:.3e}");
            }
            let worst = summary.worst();
            println!("max relative gradient error: {worst:.3e}");
            if worst < 1e-5 {
                Ok(())
            } else {
                Err(format!("gradient check failed: {worst:.3e} >= 1e-5"))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => fail(msg),
    }
}
