//! Experiment tables and run-directory plumbing shared by the CLI and the
//! acceptance checks.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::dataset::PairedSample;
use crate::metrics::{ms_ssim, SsimConfig};
use crate::models::{AblationReport, UnshearModel};
use crate::nn::{NnError, Params};
use crate::posenet::{PoseNet, PosePrediction};
use crate::sim::BinaryImage;
use crate::tensor::Tensor;

pub fn image_tensor(img: &BinaryImage) -> Tensor<f32> {
    Tensor::from_vec(&[img.height, img.width], img.to_f32())
}

/// One similarity row: per-stimulus means plus the sample-weighted overall.
#[derive(Debug, Clone, PartialEq)]
pub struct SsimRow {
    pub label: String,
    /// (stimulus id, mean score, sample count), sorted by id.
    pub per_stimulus: Vec<(u16, f64, usize)>,
    pub overall: f64,
    pub samples: usize,
}

impl SsimRow {
    fn from_scores(label: &str, scores: &[(u16, f64)]) -> SsimRow {
        let mut by_stim: BTreeMap<u16, (f64, usize)> = BTreeMap::new();
        for &(stim, v) in scores {
            let e = by_stim.entry(stim).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
        let per_stimulus: Vec<(u16, f64, usize)> =
            by_stim.into_iter().map(|(s, (sum, n))| (s, sum / n as f64, n)).collect();
        let samples: usize = per_stimulus.iter().map(|r| r.2).sum();
        let overall = per_stimulus.iter().map(|r| r.1 * r.2 as f64).sum::<f64>() / samples as f64;
        SsimRow { label: label.to_string(), per_stimulus, overall, samples }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1 {
    pub rows: Vec<SsimRow>,
}

impl Table1 {
    pub fn row(&self, label: &str) -> &SsimRow {
        self.rows.iter().find(|r| r.label == label).expect("unknown table 1 row")
    }
}

/// Compares held-out tap frames against the raw sheared frames and both
/// restorations. Row labels: tap_tap, sheared, entangled, disentangled.
pub fn run_table1(
    entangled: (&UnshearModel, &Params<f32>),
    disentangled: (&UnshearModel, &Params<f32>),
    pairs: &[PairedSample],
    ssim_cfg: &SsimConfig,
) -> Result<Table1, NnError> {
    assert!(!pairs.is_empty(), "empty evaluation split");
    let mut tap_tap = Vec::with_capacity(pairs.len());
    let mut raw = Vec::with_capacity(pairs.len());
    let mut ent = Vec::with_capacity(pairs.len());
    let mut dis = Vec::with_capacity(pairs.len());
    for p in pairs {
        let tap = image_tensor(&p.canonical.raster);
        let sheared = image_tensor(&p.sheared.raster);
        let ent_out = entangled.0.unshear(entangled.1, &sheared)?;
        let dis_out = disentangled.0.unshear(disentangled.1, &sheared)?;
        tap_tap.push((p.stimulus_id, ms_ssim(&tap, &tap, ssim_cfg)));
        raw.push((p.stimulus_id, ms_ssim(&tap, &sheared, ssim_cfg)));
        ent.push((p.stimulus_id, ms_ssim(&tap, &ent_out, ssim_cfg)));
        dis.push((p.stimulus_id, ms_ssim(&tap, &dis_out, ssim_cfg)));
    }
    Ok(Table1 {
        rows: vec![
            SsimRow::from_scores("tap_tap", &tap_tap),
            SsimRow::from_scores("sheared", &raw),
            SsimRow::from_scores("entangled", &ent),
            SsimRow::from_scores("disentangled", &dis),
        ],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaeRow {
    pub label: String,
    pub mae_tau_x_mm: f64,
    pub mae_yaw_deg: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table2 {
    pub rows: Vec<MaeRow>,
}

impl Table2 {
    pub fn row(&self, label: &str) -> &MaeRow {
        self.rows.iter().find(|r| r.label == label).expect("unknown table 2 row")
    }
}

/// A pose-labelled evaluation frame: image plus ground truth.
#[derive(Debug, Clone)]
pub struct EvalFrame {
    pub image: Tensor<f32>,
    pub tau_x_mm: f64,
    pub yaw_deg: f64,
}

/// Mean absolute error of `predict` over `frames`. The predictor sees the
/// whole frame, so a ground-truth oracle plugs in for sanity checks.
pub fn pose_mae(
    frames: &[EvalFrame],
    predict: &mut dyn FnMut(&EvalFrame) -> Result<PosePrediction, NnError>,
) -> Result<(f64, f64), NnError> {
    assert!(!frames.is_empty(), "empty evaluation split");
    let mut ex = 0.0;
    let mut eyaw = 0.0;
    for f in frames {
        let p = predict(f)?;
        ex += (p.tau_x_mm - f.tau_x_mm).abs();
        eyaw += (p.yaw_deg - f.yaw_deg).abs();
    }
    let n = frames.len() as f64;
    Ok((ex / n, eyaw / n))
}

/// Pose error of one regressor fed four flavours of the same held-out
/// contacts: the tap frame, the raw sheared frame, and both restorations.
/// Row labels: tap, sheared, entangled, disentangled.
pub fn run_table2(
    posenet: (&PoseNet, &Params<f32>),
    entangled: (&UnshearModel, &Params<f32>),
    disentangled: (&UnshearModel, &Params<f32>),
    pairs: &[PairedSample],
) -> Result<Table2, NnError> {
    assert!(!pairs.is_empty(), "empty evaluation split");
    let mut variants: Vec<(&str, Vec<EvalFrame>)> = vec![
        ("tap", Vec::new()),
        ("sheared", Vec::new()),
        ("entangled", Vec::new()),
        ("disentangled", Vec::new()),
    ];
    for p in pairs {
        let tau_x = p.pose.x_mm;
        let yaw = p.pose.yaw_deg;
        let sheared = image_tensor(&p.sheared.raster);
        let make = |image| EvalFrame { image, tau_x_mm: tau_x, yaw_deg: yaw };
        variants[0].1.push(make(image_tensor(&p.canonical.raster)));
        variants[1].1.push(make(sheared.clone()));
        variants[2].1.push(make(entangled.0.unshear(entangled.1, &sheared)?));
        variants[3].1.push(make(disentangled.0.unshear(disentangled.1, &sheared)?));
    }
    let mut rows = Vec::new();
    for (label, frames) in &variants {
        let (mx, myaw) = pose_mae(frames, &mut |f| posenet.0.predict(posenet.1, &f.image))?;
        rows.push(MaeRow {
            label: label.to_string(),
            mae_tau_x_mm: mx,
            mae_yaw_deg: myaw,
            samples: frames.len(),
        });
    }
    Ok(Table2 { rows })
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub table1: Option<Table1>,
    pub table2: Option<Table2>,
    pub ablation: Option<AblationReport>,
    /// Paths of files written under the run's artifacts directory.
    pub artifacts: Vec<String>,
}

impl ExperimentReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("section,row,stimulus,value_a,value_b,n\n");
        if let Some(t1) = &self.table1 {
            for r in &t1.rows {
                for &(stim, v, n) in &r.per_stimulus {
                    out.push_str(&format!("ssim,{},{},{:.9},,{}\n", r.label, stim, v, n));
                }
                out.push_str(&format!("ssim,{},overall,{:.9},,{}\n", r.label, r.overall, r.samples));
            }
        }
        if let Some(t2) = &self.table2 {
            for r in &t2.rows {
                out.push_str(&format!(
                    "mae,{},overall,{:.9},{:.9},{}\n",
                    r.label, r.mae_tau_x_mm, r.mae_yaw_deg, r.samples
                ));
            }
        }
        if let Some(ab) = &self.ablation {
            out.push_str(&format!("ablation,dc_mse,overall,{:.9},{:.9},{}\n", ab.dc_mse, ab.dc_mse_swapped, ab.samples));
            out.push_str(&format!("ablation,dc_ssim,overall,{:.9},{:.9},{}\n", ab.dc_ssim, ab.dc_ssim_swapped, ab.samples));
            out.push_str(&format!("ablation,ds_mse,overall,{:.9},{:.9},{}\n", ab.ds_mse, ab.ds_mse_swapped, ab.samples));
            out.push_str(&format!("ablation,ds_ssim,overall,{:.9},{:.9},{}\n", ab.ds_ssim, ab.ds_ssim_swapped, ab.samples));
        }
        for a in &self.artifacts {
            out.push_str(&format!("artifact,{a},,,,\n"));
        }
        out
    }
}

/// Resolves `<root>/<name>` where root is $TACSHEAR_RUN_DIR or ./runs, and
/// creates `artifacts/` inside it.
pub fn prepare_run_dir(name: &str) -> std::io::Result<PathBuf> {
    let root = std::env::var_os("TACSHEAR_RUN_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
    let dir = root.join(name);
    std::fs::create_dir_all(dir.join("artifacts"))?;
    Ok(dir)
}

pub fn write_run(dir: &Path, config_text: &str, report: &ExperimentReport) -> std::io::Result<()> {
    std::fs::create_dir_all(dir.join("artifacts"))?;
    std::fs::write(dir.join("config.txt"), config_text)?;
    std::fs::write(dir.join("report.csv"), report.csv())?;
    Ok(())
}
