//! Parametric simulator of a marker-based soft tactile sensor contacting
//! planar stimuli.

pub mod config;
pub mod contact;
pub mod frame;
pub mod marker;
pub mod raster;
pub mod shape;

pub use config::SensorConfig;
pub use contact::{deform_markers, indentation_field, ContactPose, IndentationField, ShearPerturbation};
pub use frame::{deformed_markers, sense_slide, sense_tap, TactileFrame};
pub use marker::MarkerField;
pub use raster::{mm_to_px, px_to_mm, rasterize, BinaryImage};
pub use shape::{ShapeKind, StimulusShape};

use crate::geom::Vec2;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("pose component {component} out of range: {value}")]
    PoseOutOfRange { component: &'static str, value: f64 },
    #[error("marker field has {markers} markers but {samples} field samples")]
    LengthMismatch { markers: usize, samples: usize },
    #[error("{clipped} of {total} markers clipped outside the aperture")]
    TooManyClipped { clipped: usize, total: usize },
    #[error("bad config: {0}")]
    BadConfig(&'static str),
    #[error("bad shape definition: {0}")]
    BadShapeDef(String),
}

/// Parse a stimulus shape from a plain-text key=value definition.
///
/// ```text
/// kind=disk
/// radius=12.0
/// ```
/// or, for polyline shapes:
/// ```text
/// kind=custom
/// polyline=0,0 10,0 10,10 0,10
/// ```
pub fn parse_shape_config(text: &str) -> Result<StimulusShape, SimError> {
    let mut kv = std::collections::BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| SimError::BadShapeDef(format!("expected key=value, got {line:?}")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let kind_str = kv.get("kind").ok_or_else(|| SimError::BadShapeDef("missing kind".into()))?;
    let kind = ShapeKind::parse(kind_str)
        .ok_or_else(|| SimError::BadShapeDef(format!("unknown kind {kind_str:?}")))?;
    let get_f = |key: &str, default: f64| -> Result<f64, SimError> {
        match kv.get(key) {
            None => Ok(default),
            Some(s) => s.parse::<f64>().map_err(|_| SimError::BadShapeDef(format!("bad {key}: {s:?}"))),
        }
    };
    let shape = match kind {
        ShapeKind::Disk => StimulusShape::disk(get_f("radius", 12.0)?),
        ShapeKind::Clover => StimulusShape::clover(get_f("radius", 11.0)?),
        ShapeKind::Teardrop => StimulusShape::teardrop(get_f("radius", 11.0)?),
        ShapeKind::Spiral1 | ShapeKind::Spiral2 => {
            let defaults = StimulusShape::by_kind(kind);
            let _ = defaults;
            StimulusShape::spiral(
                kind,
                get_f("a", 3.0)?,
                get_f("b", 1.1)?,
                get_f("turns", 1.75)?,
                get_f("width", 5.0)?,
            )
        }
        ShapeKind::Custom => {
            let poly = kv
                .get("polyline")
                .ok_or_else(|| SimError::BadShapeDef("custom shape needs polyline=".into()))?;
            let mut pts = Vec::new();
            for tok in poly.split_whitespace() {
                let (x, y) = tok
                    .split_once(',')
                    .ok_or_else(|| SimError::BadShapeDef(format!("bad point {tok:?}")))?;
                let x: f64 = x.parse().map_err(|_| SimError::BadShapeDef(format!("bad point {tok:?}")))?;
                let y: f64 = y.parse().map_err(|_| SimError::BadShapeDef(format!("bad point {tok:?}")))?;
                pts.push(Vec2::new(x, y));
            }
            if pts.len() < 3 {
                return Err(SimError::BadShapeDef("polyline needs >= 3 points".into()));
            }
            StimulusShape::from_polygon(ShapeKind::Custom, pts)
        }
    };
    let anchor_s = get_f("anchor_arclength", 0.0)?;
    Ok(shape.anchored_at(anchor_s))
}
