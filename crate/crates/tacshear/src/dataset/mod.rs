//! Paired tap/slide and pose-labelled dataset generation, storage, loading.
//!
//! On-disk layout per dataset directory:
//!   manifest.txt  UTF-8 key=value (seed, counts, config hash, pose table,
//!                 per-sample metadata)
//!   samples.bin   per sample: u32 LE sample-id, u8 flags (bit0 canonical),
//!                 pose as 4 f32 LE (x, y, depth, yaw), shear as 2 f32 LE,
//!                 raster as H*W bits packed row-major (little-endian within
//!                 each byte)
//!   index.bin     u64 LE byte offset per sample

mod format;
mod generate;
mod loader;

pub use format::{record_size, DatasetManifest, PoseRecord, SampleMeta, Split};
pub use generate::{generate_paired, generate_pose_dataset, DatasetConfig};
pub use loader::{batch, load_split, Dataset, PairedSample, PoseSample, StoredSample};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("simulation failed: {0}")]
    Sim(#[from] crate::sim::SimError),
    #[error("dataset exists with same seed but different config hash {found:016x} (want {want:016x}); refusing to overwrite")]
    ConfigHashMismatch { found: u64, want: u64 },
    #[error("bad manifest: {0}")]
    BadManifest(String),
    #[error("corrupt dataset file {file}: expected {expected} bytes, found {found} (first mismatch at byte {offset})")]
    Corrupt { file: &'static str, expected: u64, found: u64, offset: u64 },
    #[error("unknown split {0:?}")]
    UnknownSplit(String),
    #[error("split {0:?} has no samples")]
    EmptySplit(&'static str),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{sense_tap, ContactPose, ShapeKind, StimulusShape};
    use std::collections::HashSet;

    fn tiny_config() -> DatasetConfig {
        DatasetConfig {
            shapes: vec![ShapeKind::Disk, ShapeKind::Clover],
            poses_per_shape: 5,
            canonical_per_pose: 2,
            sheared_per_pose: 3,
            pose_samples_per_shape: 10,
            ..DatasetConfig::default()
        }
    }

    #[test]
    fn desk_default_counts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = DatasetConfig::default();
        let m = generate_paired(&cfg, 7, dir.path()).unwrap();
        assert_eq!(m.counts["canonical"], 600);
        assert_eq!(m.counts["sheared"], 1800);
        assert_eq!(m.counts["total"], 2400);
    }

    #[test]
    fn desk_pose_dataset_counts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = DatasetConfig::default();
        let m = generate_pose_dataset(&cfg, 7, dir.path()).unwrap();
        assert_eq!(m.counts["total"], 1200);
        assert_eq!(m.counts["train"], 720);
        assert_eq!(m.counts["val"], 240);
        assert_eq!(m.counts["test"], 240);
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let cfg = tiny_config();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        generate_paired(&cfg, 11, d1.path()).unwrap();
        generate_paired(&cfg, 11, d2.path()).unwrap();
        for f in ["manifest.txt", "samples.bin", "index.bin"] {
            let a = std::fs::read(d1.path().join(f)).unwrap();
            let b = std::fs::read(d2.path().join(f)).unwrap();
            assert_eq!(a, b, "{f} differs between identical runs");
        }
    }

    #[test]
    fn refuses_overwrite_on_config_change() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config();
        generate_paired(&cfg, 3, dir.path()).unwrap();
        let mut changed = cfg.clone();
        changed.sheared_per_pose += 1;
        let err = generate_paired(&changed, 3, dir.path()).unwrap_err();
        assert!(matches!(err, DatasetError::ConfigHashMismatch { .. }), "got {err:?}");
    }

    #[test]
    fn split_hygiene_and_ranges() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config();
        let m = generate_paired(&cfg, 21, dir.path()).unwrap();
        let mut seen: Vec<HashSet<u32>> = vec![HashSet::new(), HashSet::new(), HashSet::new()];
        for (i, p) in m.poses.iter().enumerate() {
            let bucket = match p.split {
                Split::Train => 0,
                Split::Val => 1,
                Split::Test => 2,
            };
            seen[bucket].insert(i as u32);
        }
        assert!(seen[0].is_disjoint(&seen[1]));
        assert!(seen[0].is_disjoint(&seen[2]));
        assert!(seen[1].is_disjoint(&seen[2]));
        assert_eq!(seen.iter().map(|s| s.len()).sum::<usize>(), m.poses.len());

        let ds = Dataset::open(dir.path()).unwrap();
        for i in 0..ds.len() {
            let s = ds.sample(i);
            assert!(s.pose.x_mm.abs() <= cfg.sensor.pose_range_mm);
            assert!(s.pose.y_mm.abs() <= cfg.sensor.pose_range_mm);
            assert!(s.pose.yaw_deg.abs() <= cfg.sensor.yaw_range_deg);
            assert!(s.pose.depth_mm >= 0.0 && s.pose.depth_mm <= cfg.sensor.depth_max_mm);
            assert!(s.shear[0].abs() as f64 <= cfg.sensor.shear_max_mm);
            assert!(s.shear[1].abs() as f64 <= cfg.sensor.shear_max_mm);
        }
    }

    #[test]
    fn pairing_resimulates_canonical_raster() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config();
        let m = generate_paired(&cfg, 33, dir.path()).unwrap();
        let ds = Dataset::open(dir.path()).unwrap();
        for split in [Split::Train, Split::Val, Split::Test] {
            for pair in ds.paired_split(split) {
                assert!(!pair.sheared.is_canonical);
                assert!(pair.canonical.is_canonical);
                assert_eq!(pair.sheared.meta.pose_id, pair.canonical.meta.pose_id);
                let rec = &m.poses[pair.canonical.meta.pose_id as usize];
                let shape = StimulusShape::by_kind(m.shapes[rec.shape_idx]).anchored_at(rec.anchor_s);
                let contact = ContactPose::new(rec.x, rec.y, pair.canonical.meta.depth, rec.yaw);
                let frame = sense_tap(&shape, &contact, rec.shape_idx as u16, &cfg.sensor).unwrap();
                assert_eq!(frame.raster, pair.canonical.raster);
            }
        }
    }

    #[test]
    fn unknown_split_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        generate_paired(&tiny_config(), 1, dir.path()).unwrap();
        let err = load_split(dir.path(), "holdout").unwrap_err();
        assert!(matches!(err, DatasetError::UnknownSplit(_)));
        assert!(load_split(dir.path(), "train").is_ok());
    }

    #[test]
    fn truncated_samples_file_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        generate_paired(&tiny_config(), 5, dir.path()).unwrap();
        let path = dir.path().join("samples.bin");
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        match Dataset::open(dir.path()).unwrap_err() {
            DatasetError::Corrupt { file, expected, found, offset } => {
                assert_eq!(file, "samples.bin");
                assert_eq!(expected, bytes.len() as u64);
                assert_eq!(found, bytes.len() as u64 - 3);
                assert_eq!(offset, found);
            }
            other => panic!("expected Corrupt, got {other:?}"),
        }
    }

    #[test]
    fn batches_partition_and_repeat() {
        let items: Vec<u32> = (0..23).collect();
        let b1 = batch(&items, 5, 42);
        let b2 = batch(&items, 5, 42);
        assert_eq!(b1, b2);
        assert_eq!(b1.len(), 5);
        assert!(b1[..4].iter().all(|b| b.len() == 5));
        assert_eq!(b1[4].len(), 3);
        let mut flat: Vec<u32> = b1.into_iter().flatten().collect();
        flat.sort_unstable();
        assert_eq!(flat, items);
        let single = batch(&items, items.len(), 9);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].len(), items.len());
    }
}
