//! Tactile frame capture: tap (canonical) and slide (sheared) sensing.

use crate::sim::config::SensorConfig;
use crate::sim::contact::{deform_markers, indentation_field, ContactPose, ShearPerturbation};
use crate::sim::marker::MarkerField;
use crate::sim::raster::{rasterize, BinaryImage};
use crate::sim::shape::StimulusShape;
use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct TactileFrame {
    pub raster: BinaryImage,
    pub pose: ContactPose,
    pub shear: ShearPerturbation,
    pub stimulus_id: u16,
    pub is_canonical: bool,
    /// Markers whose center left the aperture during rasterization.
    pub clipped_markers: usize,
}

/// Slide contact: accumulated lateral shear superimposed on the imprint.
pub fn sense_slide(
    shape: &StimulusShape,
    pose: &ContactPose,
    shear: &ShearPerturbation,
    stimulus_id: u16,
    cfg: &SensorConfig,
) -> Result<TactileFrame, SimError> {
    pose.validate(cfg)?;
    shear.validate(cfg)?;
    let rest = MarkerField::rest_grid(cfg);
    let ind = indentation_field(shape, pose, cfg, &rest.rest_positions);
    let deformed = deform_markers(&rest, &ind, shear, cfg)?;
    let (raster, clipped) = rasterize(&deformed, cfg)?;
    let is_canonical = shear.offset == crate::geom::Vec2::ZERO;
    Ok(TactileFrame { raster, pose: *pose, shear: *shear, stimulus_id, is_canonical, clipped_markers: clipped })
}

/// Tap contact: no sliding shear.
pub fn sense_tap(
    shape: &StimulusShape,
    pose: &ContactPose,
    stimulus_id: u16,
    cfg: &SensorConfig,
) -> Result<TactileFrame, SimError> {
    sense_slide(shape, pose, &ShearPerturbation::NONE, stimulus_id, cfg)
}

/// Deformed marker field for a contact, without rasterizing.
pub fn deformed_markers(
    shape: &StimulusShape,
    pose: &ContactPose,
    shear: &ShearPerturbation,
    cfg: &SensorConfig,
) -> Result<MarkerField, SimError> {
    let rest = MarkerField::rest_grid(cfg);
    let ind = indentation_field(shape, pose, cfg, &rest.rest_positions);
    deform_markers(&rest, &ind, shear, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (SensorConfig, StimulusShape) {
        (SensorConfig::default(), StimulusShape::disk(12.0).anchored_at(0.0))
    }

    #[test]
    fn slide_with_zero_shear_equals_tap() {
        let (cfg, shape) = setup();
        let pose = ContactPose::new(0.5, -1.0, 1.5, 15.0);
        let tap = sense_tap(&shape, &pose, 0, &cfg).unwrap();
        let slide = sense_slide(&shape, &pose, &ShearPerturbation::NONE, 0, &cfg).unwrap();
        assert_eq!(tap, slide);
        assert!(tap.is_canonical);
    }

    #[test]
    fn opposite_shears_differ() {
        let (cfg, shape) = setup();
        let pose = ContactPose::new(0.0, 0.0, 1.5, 0.0);
        let a = sense_slide(&shape, &pose, &ShearPerturbation::new(1.0, 0.0), 0, &cfg).unwrap();
        let b = sense_slide(&shape, &pose, &ShearPerturbation::new(-1.0, 0.0), 0, &cfg).unwrap();
        assert_ne!(a.raster, b.raster);
        assert!(!a.is_canonical);
    }

    #[test]
    fn no_contact_makes_shear_irrelevant() {
        let (cfg, shape) = setup();
        let pose = ContactPose::new(0.0, 0.0, 0.0, 0.0);
        let tap = sense_tap(&shape, &pose, 0, &cfg).unwrap();
        let slide = sense_slide(&shape, &pose, &ShearPerturbation::new(2.0, -1.5), 0, &cfg).unwrap();
        assert_eq!(tap.raster, slide.raster);
    }

    #[test]
    fn out_of_range_pose_names_component() {
        let (cfg, shape) = setup();
        let pose = ContactPose::new(9.0, 0.0, 1.0, 0.0);
        match sense_tap(&shape, &pose, 0, &cfg) {
            Err(SimError::PoseOutOfRange { component, .. }) => assert_eq!(component, "x"),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn equivariance_under_joint_translation() {
        // Translating the whole stimulus (boundary + anchor) laterally while
        // keeping the same relative pose leaves the raster identical.
        let (cfg, shape) = setup();
        let pose = ContactPose::new(-1.0, 2.0, 2.0, -30.0);
        let a = sense_tap(&shape, &pose, 3, &cfg).unwrap();

        let v = crate::geom::Vec2::new(2.0, -1.5);
        let moved_poly: Vec<_> = shape.boundary().iter().map(|&p| p + v).collect();
        let mut moved = StimulusShape::from_polygon(shape.kind, moved_poly);
        moved.anchor_pose = crate::geom::Pose2 { pos: shape.anchor_pose.pos + v, yaw_deg: shape.anchor_pose.yaw_deg };
        let b = sense_tap(&moved, &pose, 3, &cfg).unwrap();
        assert_eq!(a.raster, b.raster);
    }

    #[test]
    fn larger_shear_weakly_increases_displacement() {
        let (cfg, shape) = setup();
        let pose = ContactPose::new(-2.0, 0.0, 2.0, 0.0);
        let mut prev = None;
        for k in 0..=5 {
            let s = ShearPerturbation::new(0.5 * k as f64, 0.0);
            let f = deformed_markers(&shape, &pose, &s, &cfg).unwrap();
            let disp = f.mean_displacement();
            if let Some(p) = prev {
                assert!(disp >= p - 1e-12, "displacement decreased: {disp} < {p}");
            }
            prev = Some(disp);
        }
    }
}
