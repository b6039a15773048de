//! Manifest and record encoding for the dataset files.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dataset::DatasetError;
use crate::sim::{BinaryImage, ContactPose, ShapeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        Some(match s {
            "train" => Split::Train,
            "val" => Split::Val,
            "test" => Split::Test,
            _ => return None,
        })
    }
}

/// One unique contact pose: full-precision values for re-simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseRecord {
    pub shape_idx: usize,
    /// Anchor arclength along the stimulus contour (mm).
    pub anchor_s: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub base_depth: f64,
    pub split: Split,
}

/// Per-sample metadata kept in the manifest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMeta {
    pub pose_id: u32,
    /// For sheared samples: the canonical sample paired with it.
    pub pair_id: Option<u32>,
    /// Exact depth of this instance (canonical instances jitter it).
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub config_hash: u64,
    pub raster_size: usize,
    pub shapes: Vec<ShapeKind>,
    pub counts: BTreeMap<String, u64>,
    pub poses: Vec<PoseRecord>,
    pub samples: Vec<SampleMeta>,
}

pub fn record_size(raster_size: usize) -> usize {
    4 + 1 + 16 + 8 + (raster_size * raster_size).div_ceil(8)
}

pub fn encode_record(id: u32, canonical: bool, pose: &ContactPose, shear: [f32; 2], raster: &BinaryImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(record_size(raster.width));
    out.extend_from_slice(&id.to_le_bytes());
    out.push(if canonical { 1 } else { 0 });
    for v in [pose.x_mm as f32, pose.y_mm as f32, pose.depth_mm as f32, pose.yaw_deg as f32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in shear {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut byte = 0u8;
    let mut nbits = 0;
    for &p in &raster.pixels {
        byte |= (p & 1) << nbits;
        nbits += 1;
        if nbits == 8 {
            out.push(byte);
            byte = 0;
            nbits = 0;
        }
    }
    if nbits > 0 {
        out.push(byte);
    }
    out
}

pub struct DecodedRecord {
    pub id: u32,
    pub is_canonical: bool,
    pub pose: ContactPose,
    pub shear: [f32; 2],
    pub raster: BinaryImage,
}

pub fn decode_record(bytes: &[u8], raster_size: usize) -> DecodedRecord {
    let id = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let is_canonical = bytes[4] & 1 == 1;
    let f = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let pose = ContactPose::new(f(5) as f64, f(9) as f64, f(13) as f64, f(17) as f64);
    let shear = [f(21), f(25)];
    let mut pixels = Vec::with_capacity(raster_size * raster_size);
    let base = 29;
    for i in 0..raster_size * raster_size {
        pixels.push((bytes[base + i / 8] >> (i % 8)) & 1);
    }
    DecodedRecord { id, is_canonical, pose, shear, raster: BinaryImage { height: raster_size, width: raster_size, pixels } }
}

impl DatasetManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("seed={}\n", self.seed));
        s.push_str(&format!("config_hash={:016x}\n", self.config_hash));
        s.push_str(&format!("raster_size={}\n", self.raster_size));
        s.push_str(&format!(
            "shapes={}\n",
            self.shapes.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")
        ));
        for (k, v) in &self.counts {
            s.push_str(&format!("count.{k}={v}\n"));
        }
        for (i, p) in self.poses.iter().enumerate() {
            s.push_str(&format!(
                "pose.{i}={},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                p.shape_idx, p.anchor_s, p.x, p.y, p.yaw, p.base_depth, p.split.name()
            ));
        }
        for (i, m) in self.samples.iter().enumerate() {
            let pair = m.pair_id.map(|p| p.to_string()).unwrap_or_else(|| "-".into());
            s.push_str(&format!("meta.{i}={},{},{:.17e}\n", m.pose_id, pair, m.depth));
        }
        s
    }

    pub fn parse(text: &str) -> Result<DatasetManifest, DatasetError> {
        let bad = |why: String| DatasetError::BadManifest(why);
        let mut seed = None;
        let mut config_hash = None;
        let mut raster_size = None;
        let mut shapes = Vec::new();
        let mut counts = BTreeMap::new();
        let mut poses: BTreeMap<usize, PoseRecord> = BTreeMap::new();
        let mut samples: BTreeMap<usize, SampleMeta> = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("no '=' in {line:?}")))?;
            if k == "seed" {
                seed = Some(v.parse().map_err(|_| bad(format!("bad seed {v:?}")))?);
            } else if k == "config_hash" {
                config_hash = Some(u64::from_str_radix(v, 16).map_err(|_| bad(format!("bad hash {v:?}")))?);
            } else if k == "raster_size" {
                raster_size = Some(v.parse().map_err(|_| bad(format!("bad raster_size {v:?}")))?);
            } else if k == "shapes" {
                for name in v.split(',') {
                    shapes.push(ShapeKind::parse(name).ok_or_else(|| bad(format!("bad shape {name:?}")))?);
                }
            } else if let Some(name) = k.strip_prefix("count.") {
                counts.insert(name.to_string(), v.parse().map_err(|_| bad(format!("bad count {v:?}")))?);
            } else if let Some(idx) = k.strip_prefix("pose.") {
                let idx: usize = idx.parse().map_err(|_| bad(format!("bad pose idx {k:?}")))?;
                let parts: Vec<&str> = v.split(',').collect();
                if parts.len() != 7 {
                    return Err(bad(format!("bad pose line {line:?}")));
                }
                let pf = |i: usize| -> Result<f64, DatasetError> {
                    parts[i].parse().map_err(|_| bad(format!("bad float in {line:?}")))
                };
                poses.insert(
                    idx,
                    PoseRecord {
                        shape_idx: parts[0].parse().map_err(|_| bad(format!("bad shape idx {line:?}")))?,
                        anchor_s: pf(1)?,
                        x: pf(2)?,
                        y: pf(3)?,
                        yaw: pf(4)?,
                        base_depth: pf(5)?,
                        split: Split::parse(parts[6]).ok_or_else(|| bad(format!("bad split {line:?}")))?,
                    },
                );
            } else if let Some(idx) = k.strip_prefix("meta.") {
                let idx: usize = idx.parse().map_err(|_| bad(format!("bad meta idx {k:?}")))?;
                let parts: Vec<&str> = v.split(',').collect();
                if parts.len() != 3 {
                    return Err(bad(format!("bad meta line {line:?}")));
                }
                let pair_id = if parts[1] == "-" {
                    None
                } else {
                    Some(parts[1].parse().map_err(|_| bad(format!("bad pair id {line:?}")))?)
                };
                samples.insert(
                    idx,
                    SampleMeta {
                        pose_id: parts[0].parse().map_err(|_| bad(format!("bad pose id {line:?}")))?,
                        pair_id,
                        depth: parts[2].parse().map_err(|_| bad(format!("bad depth {line:?}")))?,
                    },
                );
            }
        }
        let poses: Vec<PoseRecord> = poses.into_values().collect();
        let samples: Vec<SampleMeta> = samples.into_values().collect();
        Ok(DatasetManifest {
            seed: seed.ok_or_else(|| bad("missing seed".into()))?,
            config_hash: config_hash.ok_or_else(|| bad("missing config_hash".into()))?,
            raster_size: raster_size.ok_or_else(|| bad("missing raster_size".into()))?,
            shapes,
            counts,
            poses,
            samples,
        })
    }

    pub fn load(dir: &Path) -> Result<DatasetManifest, DatasetError> {
        let text = std::fs::read_to_string(dir.join("manifest.txt"))?;
        Self::parse(&text)
    }
}
