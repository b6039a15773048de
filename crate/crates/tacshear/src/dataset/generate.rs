//! Dataset generation: sample poses, simulate frames, write the files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::dataset::format::{encode_record, DatasetManifest, PoseRecord, SampleMeta, Split};
use crate::dataset::DatasetError;
use crate::rng::Stream;
use crate::sim::{sense_slide, sense_tap, ContactPose, SensorConfig, ShapeKind, ShearPerturbation, StimulusShape};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub sensor: SensorConfig,
    pub shapes: Vec<ShapeKind>,
    /// Distinct contact poses per shape in the paired dataset.
    pub poses_per_shape: usize,
    /// Tap instances per pose.
    pub canonical_per_pose: usize,
    /// Slide instances per pose.
    pub sheared_per_pose: usize,
    /// Samples per shape in the pose-labelled dataset (one per pose).
    pub pose_samples_per_shape: usize,
    /// Base tap depth is drawn uniformly from this range (mm).
    pub depth_lo_mm: f64,
    pub depth_hi_mm: f64,
    /// Canonical instances jitter depth uniformly within +- this (mm).
    pub depth_jitter_mm: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            sensor: SensorConfig::default(),
            shapes: vec![ShapeKind::Disk, ShapeKind::Clover, ShapeKind::Teardrop],
            poses_per_shape: 40,
            canonical_per_pose: 5,
            sheared_per_pose: 15,
            pose_samples_per_shape: 400,
            depth_lo_mm: 1.5,
            depth_hi_mm: 2.5,
            depth_jitter_mm: 1.0,
        }
    }
}

impl DatasetConfig {
    pub fn paper_scale() -> Self {
        DatasetConfig {
            poses_per_shape: 200,
            canonical_per_pose: 50,
            sheared_per_pose: 150,
            pose_samples_per_shape: 10_000,
            ..DatasetConfig::default()
        }
    }

    /// FNV-1a over a canonical rendering; stored in the manifest so stale
    /// directories are detected instead of silently mixed.
    pub fn hash(&self) -> u64 {
        let shapes: Vec<&str> = self.shapes.iter().map(|k| k.name()).collect();
        let text = format!(
            "{:?}|{}|{}|{}|{}|{}|{:.9}|{:.9}|{:.9}",
            self.sensor,
            shapes.join(","),
            self.poses_per_shape,
            self.canonical_per_pose,
            self.sheared_per_pose,
            self.pose_samples_per_shape,
            self.depth_lo_mm,
            self.depth_hi_mm,
            self.depth_jitter_mm,
        );
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// Stored values are f32; round the simulator inputs the same way so a stored
/// record can be re-simulated bit-identically.
fn q(v: f64) -> f64 {
    v as f32 as f64
}

fn assign_splits(n_poses: usize, rng: &mut Stream) -> Vec<Split> {
    let mut order: Vec<usize> = (0..n_poses).collect();
    rng.shuffle(&mut order);
    let n_train = n_poses * 3 / 5;
    let n_val = n_poses / 5;
    let mut splits = vec![Split::Test; n_poses];
    for (rank, &pose) in order.iter().enumerate() {
        splits[pose] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    splits
}

fn check_existing(dir: &Path, want_hash: u64) -> Result<(), DatasetError> {
    if dir.join("manifest.txt").exists() {
        let found = DatasetManifest::load(dir)?.config_hash;
        if found != want_hash {
            return Err(DatasetError::ConfigHashMismatch { found, want: want_hash });
        }
    }
    Ok(())
}

fn write_files(dir: &Path, manifest: &DatasetManifest, records: &[Vec<u8>]) -> Result<(), DatasetError> {
    std::fs::create_dir_all(dir)?;
    let mut samples = std::fs::File::create(dir.join("samples.bin"))?;
    let mut index = std::fs::File::create(dir.join("index.bin"))?;
    let mut offset = 0u64;
    for rec in records {
        index.write_all(&offset.to_le_bytes())?;
        samples.write_all(rec)?;
        offset += rec.len() as u64;
    }
    std::fs::write(dir.join("manifest.txt"), manifest.to_text())?;
    Ok(())
}

fn sample_pose_records(
    cfg: &DatasetConfig,
    per_shape: usize,
    shapes: &[StimulusShape],
    rng: &mut Stream,
    split_rng: &mut Stream,
) -> Vec<PoseRecord> {
    let r = cfg.sensor.pose_range_mm;
    let yaw = cfg.sensor.yaw_range_deg;
    let mut poses = Vec::with_capacity(per_shape * shapes.len());
    for (shape_idx, shape) in shapes.iter().enumerate() {
        for _ in 0..per_shape {
            poses.push(PoseRecord {
                shape_idx,
                anchor_s: rng.uniform_in(0.0, shape.perimeter()),
                x: q(rng.uniform_in(-r, r)),
                y: q(rng.uniform_in(-r, r)),
                yaw: q(rng.uniform_in(-yaw, yaw)),
                base_depth: q(rng.uniform_in(cfg.depth_lo_mm, cfg.depth_hi_mm)),
                split: Split::Train,
            });
        }
    }
    let splits = assign_splits(poses.len(), split_rng);
    for (p, s) in poses.iter_mut().zip(splits) {
        p.split = s;
    }
    poses
}

fn count_by_split(manifest: &mut DatasetManifest) {
    let mut by_split: BTreeMap<&'static str, u64> = BTreeMap::new();
    for meta in &manifest.samples {
        let split = manifest.poses[meta.pose_id as usize].split;
        *by_split.entry(split.name()).or_insert(0) += 1;
    }
    for (k, v) in by_split {
        manifest.counts.insert(k.to_string(), v);
    }
    manifest.counts.insert("total".into(), manifest.samples.len() as u64);
}

/// Paired tap/slide dataset: for every pose, K_c tap instances with jittered
/// depth and K_s slide instances at the base depth, each slide paired with a
/// random tap instance of the same pose.
pub fn generate_paired(cfg: &DatasetConfig, seed: u64, dir: &Path) -> Result<DatasetManifest, DatasetError> {
    check_existing(dir, cfg.hash())?;
    let shapes: Vec<StimulusShape> = cfg.shapes.iter().map(|&k| StimulusShape::by_kind(k)).collect();
    let mut pose_rng = Stream::new(seed, "paired.poses");
    let mut split_rng = Stream::new(seed, "paired.split");
    let mut depth_rng = Stream::new(seed, "paired.depth");
    let mut shear_rng = Stream::new(seed, "paired.shear");
    let mut pair_rng = Stream::new(seed, "paired.pair");

    let poses = sample_pose_records(cfg, cfg.poses_per_shape, &shapes, &mut pose_rng, &mut split_rng);

    let mut records = Vec::new();
    let mut samples = Vec::new();
    let mut n_canonical = 0u64;
    let mut n_sheared = 0u64;
    for (pose_id, p) in poses.iter().enumerate() {
        let shape = shapes[p.shape_idx].anchored_at(p.anchor_s);
        let stim = p.shape_idx as u16;
        let first_canonical = samples.len() as u32;
        for _ in 0..cfg.canonical_per_pose {
            let depth = q(p.base_depth + depth_rng.uniform_in(-cfg.depth_jitter_mm, cfg.depth_jitter_mm));
            let contact = ContactPose::new(p.x, p.y, depth, p.yaw);
            let frame = sense_tap(&shape, &contact, stim, &cfg.sensor)?;
            let id = samples.len() as u32;
            records.push(encode_record(id, true, &contact, [0.0, 0.0], &frame.raster));
            samples.push(SampleMeta { pose_id: pose_id as u32, pair_id: None, depth });
            n_canonical += 1;
        }
        for _ in 0..cfg.sheared_per_pose {
            let m = cfg.sensor.shear_max_mm;
            let axis = shear_rng.below(3);
            let dx = if axis != 1 { q(shear_rng.uniform_in(-m, m)) } else { 0.0 };
            let dy = if axis != 0 { q(shear_rng.uniform_in(-m, m)) } else { 0.0 };
            let shear = ShearPerturbation::new(dx, dy);
            let contact = ContactPose::new(p.x, p.y, p.base_depth, p.yaw);
            let frame = sense_slide(&shape, &contact, &shear, stim, &cfg.sensor)?;
            let pair = first_canonical + pair_rng.below(cfg.canonical_per_pose) as u32;
            let id = samples.len() as u32;
            records.push(encode_record(id, false, &contact, [dx as f32, dy as f32], &frame.raster));
            samples.push(SampleMeta { pose_id: pose_id as u32, pair_id: Some(pair), depth: p.base_depth });
            n_sheared += 1;
        }
    }

    let mut manifest = DatasetManifest {
        seed,
        config_hash: cfg.hash(),
        raster_size: cfg.sensor.raster_size,
        shapes: cfg.shapes.clone(),
        counts: BTreeMap::new(),
        poses,
        samples,
    };
    manifest.counts.insert("canonical".into(), n_canonical);
    manifest.counts.insert("sheared".into(), n_sheared);
    count_by_split(&mut manifest);
    write_files(dir, &manifest, &records)?;
    Ok(manifest)
}

/// Pose-labelled dataset: one tap frame per pose, targets recorded from the
/// pose itself at load time.
pub fn generate_pose_dataset(cfg: &DatasetConfig, seed: u64, dir: &Path) -> Result<DatasetManifest, DatasetError> {
    check_existing(dir, cfg.hash())?;
    let shapes: Vec<StimulusShape> = cfg.shapes.iter().map(|&k| StimulusShape::by_kind(k)).collect();
    let mut pose_rng = Stream::new(seed, "pose.poses");
    let mut split_rng = Stream::new(seed, "pose.split");

    let poses = sample_pose_records(cfg, cfg.pose_samples_per_shape, &shapes, &mut pose_rng, &mut split_rng);

    let mut records = Vec::new();
    let mut samples = Vec::new();
    for (pose_id, p) in poses.iter().enumerate() {
        let shape = shapes[p.shape_idx].anchored_at(p.anchor_s);
        let contact = ContactPose::new(p.x, p.y, p.base_depth, p.yaw);
        let frame = sense_tap(&shape, &contact, p.shape_idx as u16, &cfg.sensor)?;
        let id = samples.len() as u32;
        records.push(encode_record(id, true, &contact, [0.0, 0.0], &frame.raster));
        samples.push(SampleMeta { pose_id: pose_id as u32, pair_id: None, depth: p.base_depth });
    }

    let mut manifest = DatasetManifest {
        seed,
        config_hash: cfg.hash(),
        raster_size: cfg.sensor.raster_size,
        shapes: cfg.shapes.clone(),
        counts: BTreeMap::new(),
        poses,
        samples,
    };
    count_by_split(&mut manifest);
    write_files(dir, &manifest, &records)?;
    Ok(manifest)
}
