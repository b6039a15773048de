//! Reading stored datasets back and assembling training views.

use std::path::{Path, PathBuf};

use crate::dataset::format::{decode_record, record_size, DatasetManifest, SampleMeta, Split};
use crate::dataset::DatasetError;
use crate::rng::Stream;
use crate::sim::{BinaryImage, ContactPose};

/// One record as stored, plus the manifest context it needs to be useful.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSample {
    pub id: u32,
    pub is_canonical: bool,
    pub pose: ContactPose,
    pub shear: [f32; 2],
    pub raster: BinaryImage,
    pub meta: SampleMeta,
    pub split: Split,
    pub stimulus_id: u16,
}

/// Slide frame with the tap frame it must be restored to.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub sheared: StoredSample,
    pub canonical: StoredSample,
    pub pose: ContactPose,
    pub stimulus_id: u16,
}

/// Tap frame with its regression targets.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSample {
    pub frame: StoredSample,
    /// (tau_x in mm, yaw in deg).
    pub target: [f32; 2],
}

#[derive(Debug)]
pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
    samples_bytes: Vec<u8>,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Dataset, DatasetError> {
        let manifest = DatasetManifest::load(dir)?;
        let n = manifest.samples.len() as u64;
        let rec = record_size(manifest.raster_size) as u64;

        let samples_bytes = std::fs::read(dir.join("samples.bin"))?;
        if samples_bytes.len() as u64 != n * rec {
            let found = samples_bytes.len() as u64;
            return Err(DatasetError::Corrupt {
                file: "samples.bin",
                expected: n * rec,
                found,
                offset: found.min(n * rec),
            });
        }
        let index_bytes = std::fs::read(dir.join("index.bin"))?;
        if index_bytes.len() as u64 != n * 8 {
            let found = index_bytes.len() as u64;
            return Err(DatasetError::Corrupt { file: "index.bin", expected: n * 8, found, offset: found.min(n * 8) });
        }
        for i in 0..n as usize {
            let off = u64::from_le_bytes(index_bytes[i * 8..i * 8 + 8].try_into().unwrap());
            if off != i as u64 * rec {
                return Err(DatasetError::Corrupt {
                    file: "index.bin",
                    expected: i as u64 * rec,
                    found: off,
                    offset: i as u64 * 8,
                });
            }
        }
        Ok(Dataset { dir: dir.to_path_buf(), manifest, samples_bytes })
    }

    pub fn len(&self) -> usize {
        self.manifest.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> StoredSample {
        let rec = record_size(self.manifest.raster_size);
        let dec = decode_record(&self.samples_bytes[i * rec..(i + 1) * rec], self.manifest.raster_size);
        let meta = self.manifest.samples[i];
        let pose_rec = &self.manifest.poses[meta.pose_id as usize];
        StoredSample {
            id: dec.id,
            is_canonical: dec.is_canonical,
            pose: dec.pose,
            shear: dec.shear,
            raster: dec.raster,
            meta,
            split: pose_rec.split,
            stimulus_id: pose_rec.shape_idx as u16,
        }
    }

    pub fn split_samples(&self, split: Split) -> Vec<StoredSample> {
        (0..self.len())
            .filter(|&i| self.manifest.poses[self.manifest.samples[i].pose_id as usize].split == split)
            .map(|i| self.sample(i))
            .collect()
    }

    /// Sheared samples of one split joined with their stored tap partner.
    pub fn paired_split(&self, split: Split) -> Vec<PairedSample> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            let meta = self.manifest.samples[i];
            if self.manifest.poses[meta.pose_id as usize].split != split {
                continue;
            }
            if let Some(pair) = meta.pair_id {
                let sheared = self.sample(i);
                let canonical = self.sample(pair as usize);
                let pose = sheared.pose;
                let stimulus_id = sheared.stimulus_id;
                out.push(PairedSample { sheared, canonical, pose, stimulus_id });
            }
        }
        out
    }

    /// Tap samples of one split with (tau_x, yaw) regression targets.
    pub fn pose_split(&self, split: Split) -> Vec<PoseSample> {
        self.split_samples(split)
            .into_iter()
            .filter(|s| s.is_canonical)
            .map(|frame| {
                let target = [frame.pose.x_mm as f32, frame.pose.yaw_deg as f32];
                PoseSample { frame, target }
            })
            .collect()
    }
}

/// Named-split loader, failing fast on anything but train/val/test or a split
/// that ended up empty.
pub fn load_split(dir: &Path, split: &str) -> Result<Vec<StoredSample>, DatasetError> {
    let parsed = Split::parse(split).ok_or_else(|| DatasetError::UnknownSplit(split.to_string()))?;
    let ds = Dataset::open(dir)?;
    let samples = ds.split_samples(parsed);
    if samples.is_empty() {
        return Err(DatasetError::EmptySplit(parsed.name()));
    }
    Ok(samples)
}

/// Deterministic shuffled batches; every item appears exactly once.
pub fn batch<T: Clone>(items: &[T], size: usize, seed: u64) -> Vec<Vec<T>> {
    assert!(size > 0, "batch size must be positive");
    let mut order: Vec<usize> = (0..items.len()).collect();
    Stream::new(seed, "batch").shuffle(&mut order);
    order.chunks(size).map(|chunk| chunk.iter().map(|&i| items[i].clone()).collect()).collect()
}
