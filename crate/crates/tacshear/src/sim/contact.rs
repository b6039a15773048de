//! Contact model: spherical-cap indentation of a planar stimulus and the
//! marker deformation it induces, with sliding shear superimposed.
//!
//! Deformation model per marker at rest position `p` (sensor frame):
//!   u_local(p)  = alpha * d(p) * grad d(p)
//!   u_global(p) = shear_offset * w(p)
//! with `w = 1` inside the contact region and `exp(-dist/rho)` outside; when
//! nothing is in contact the skin carries no friction and `w = 0` everywhere.

use crate::geom::{Pose2, Vec2};
use crate::sim::config::SensorConfig;
use crate::sim::marker::MarkerField;
use crate::sim::shape::StimulusShape;
use crate::sim::SimError;

/// Sensor pose relative to the stimulus anchor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPose {
    pub x_mm: f64,
    pub y_mm: f64,
    pub depth_mm: f64,
    pub yaw_deg: f64,
}

impl ContactPose {
    pub fn new(x_mm: f64, y_mm: f64, depth_mm: f64, yaw_deg: f64) -> Self {
        ContactPose { x_mm, y_mm, depth_mm, yaw_deg }
    }

    /// Sensor frame -> anchor frame.
    pub fn to_anchor(&self) -> Pose2 {
        Pose2::new(self.x_mm, self.y_mm, self.yaw_deg)
    }

    pub fn validate(&self, cfg: &SensorConfig) -> Result<(), SimError> {
        let r = cfg.pose_range_mm;
        if !self.x_mm.is_finite() || self.x_mm.abs() > r {
            return Err(SimError::PoseOutOfRange { component: "x", value: self.x_mm });
        }
        if !self.y_mm.is_finite() || self.y_mm.abs() > r {
            return Err(SimError::PoseOutOfRange { component: "y", value: self.y_mm });
        }
        if !self.depth_mm.is_finite() || self.depth_mm < 0.0 || self.depth_mm > cfg.depth_max_mm {
            return Err(SimError::PoseOutOfRange { component: "depth", value: self.depth_mm });
        }
        if !self.yaw_deg.is_finite() || self.yaw_deg.abs() > cfg.yaw_range_deg {
            return Err(SimError::PoseOutOfRange { component: "yaw", value: self.yaw_deg });
        }
        Ok(())
    }
}

/// Lateral slide accumulated since contact onset, in the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShearPerturbation {
    pub offset: Vec2,
}

impl ShearPerturbation {
    pub const NONE: ShearPerturbation = ShearPerturbation { offset: Vec2::ZERO };

    pub fn new(dx_mm: f64, dy_mm: f64) -> Self {
        ShearPerturbation { offset: Vec2::new(dx_mm, dy_mm) }
    }

    pub fn validate(&self, cfg: &SensorConfig) -> Result<(), SimError> {
        for (name, v) in [("shear_x", self.offset.x), ("shear_y", self.offset.y)] {
            if !v.is_finite() || v.abs() > cfg.shear_max_mm {
                return Err(SimError::PoseOutOfRange { component: name, value: v });
            }
        }
        Ok(())
    }
}

/// Indentation depth and derived per-point quantities sampled at a set of
/// sensor-frame query points.
#[derive(Debug, Clone)]
pub struct IndentationField {
    pub depths: Vec<f64>,
    pub gradients: Vec<Vec2>,
    /// Distance from each query point to the contact region; infinite when
    /// nothing is in contact.
    pub contact_dist: Vec<f64>,
}

/// Dome sag at radial distance `r` from the sensor axis: how much higher the
/// spherical cap sits compared to its apex.
fn dome_sag(r: f64, dome_radius: f64) -> f64 {
    if r >= dome_radius {
        f64::INFINITY
    } else {
        dome_radius - (dome_radius * dome_radius - r * r).sqrt()
    }
}

/// Indentation depth at a single sensor-frame point.
pub fn indentation_at(shape: &StimulusShape, pose: &ContactPose, cfg: &SensorConfig, p: Vec2) -> f64 {
    let pen = pose.depth_mm - dome_sag(p.norm(), cfg.dome_radius_mm);
    if pen <= 0.0 {
        return 0.0;
    }
    let sensor_to_world = shape.anchor_pose.compose(&pose.to_anchor());
    let sdf = shape.sdf(sensor_to_world.apply(p));
    // Ramp to zero across the edge keeps d continuous over the contour.
    let ramp = (-sdf / cfg.edge_width_mm).clamp(0.0, 1.0);
    pen * ramp
}

/// Sample the indentation field at `query_points` (sensor frame).
pub fn indentation_field(
    shape: &StimulusShape,
    pose: &ContactPose,
    cfg: &SensorConfig,
    query_points: &[Vec2],
) -> IndentationField {
    let h = 0.05; // central-difference step, mm
    let mut depths = Vec::with_capacity(query_points.len());
    let mut gradients = Vec::with_capacity(query_points.len());
    for &p in query_points {
        let d = indentation_at(shape, pose, cfg, p);
        depths.push(d);
        let dx = indentation_at(shape, pose, cfg, Vec2::new(p.x + h, p.y))
            - indentation_at(shape, pose, cfg, Vec2::new(p.x - h, p.y));
        let dy = indentation_at(shape, pose, cfg, Vec2::new(p.x, p.y + h))
            - indentation_at(shape, pose, cfg, Vec2::new(p.x, p.y - h));
        gradients.push(Vec2::new(dx / (2.0 * h), dy / (2.0 * h)));
    }

    let any_contact = depths.iter().any(|&d| d > 0.0);
    let contact_dist = if !any_contact {
        vec![f64::INFINITY; query_points.len()]
    } else {
        // Contact region ~ intersection of the pressed disc (radius r_c) with
        // the stimulus interior; distance approximated by the max of the two
        // component distances.
        let depth = pose.depth_mm;
        let r_c = (2.0 * cfg.dome_radius_mm * depth - depth * depth).max(0.0).sqrt();
        let sensor_to_world = shape.anchor_pose.compose(&pose.to_anchor());
        query_points
            .iter()
            .zip(&depths)
            .map(|(&p, &d)| {
                if d > 0.0 {
                    0.0
                } else {
                    let sdf = shape.sdf(sensor_to_world.apply(p));
                    sdf.max(p.norm() - r_c).max(0.0)
                }
            })
            .collect()
    };

    IndentationField { depths, gradients, contact_dist }
}

/// Contact weight for the global shear term.
fn contact_weight(dist: f64, rho: f64) -> f64 {
    if dist.is_infinite() {
        0.0
    } else if dist <= 0.0 {
        1.0
    } else {
        (-dist / rho).exp()
    }
}

/// Apply local (geometry) and global (slide) displacement to the markers.
pub fn deform_markers(
    field: &MarkerField,
    indentation: &IndentationField,
    shear: &ShearPerturbation,
    cfg: &SensorConfig,
) -> Result<MarkerField, SimError> {
    let n = field.rest_positions.len();
    if indentation.depths.len() != n || indentation.gradients.len() != n || indentation.contact_dist.len() != n {
        return Err(SimError::LengthMismatch { markers: n, samples: indentation.depths.len() });
    }
    let mut out = field.clone();
    for i in 0..n {
        let p = field.rest_positions[i];
        let u_local = indentation.gradients[i].scale(cfg.alpha * indentation.depths[i]);
        let w = contact_weight(indentation.contact_dist[i], cfg.rho_mm);
        let u_global = shear.offset.scale(w);
        out.deformed_positions[i] = p + u_local + u_global;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> SensorConfig {
        SensorConfig::default()
    }

    #[test]
    fn zero_depth_yields_zero_field() {
        let cfg = cfg();
        let shape = StimulusShape::disk(12.0);
        let pose = ContactPose::new(0.0, 0.0, 0.0, 0.0);
        let pts: Vec<Vec2> = MarkerField::rest_grid(&cfg).rest_positions;
        let f = indentation_field(&shape, &pose, &cfg, &pts);
        assert!(f.depths.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn interior_contact_matches_dome_profile() {
        // Sensor centered deep inside the disk: d = depth - sag(|p|).
        let cfg = cfg();
        let shape = StimulusShape::disk(12.0).anchored_at(0.0);
        // anchor sits on the contour; walk the sensor 5 mm inward (negative x
        // along the outward normal).
        let pose = ContactPose::new(-5.0, 0.0, 2.0, 0.0);
        let pts = [Vec2::ZERO, Vec2::new(3.0, 0.0), Vec2::new(0.0, -4.0)];
        let f = indentation_field(&shape, &pose, &cfg, &pts);
        assert_abs_diff_eq!(f.depths[0], 2.0, epsilon = 1e-9);
        for (i, p) in pts.iter().enumerate() {
            let sag = cfg.dome_radius_mm - (cfg.dome_radius_mm.powi(2) - p.norm().powi(2)).sqrt();
            // Edge ramp saturates at 1 this deep inside.
            if 2.0 - sag > 0.0 {
                assert_abs_diff_eq!(f.depths[i], 2.0 - sag, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn depth_continuous_across_edge() {
        let cfg = cfg();
        let shape = StimulusShape::disk(12.0).anchored_at(0.0);
        let pose = ContactPose::new(0.0, 0.0, 1.0, 0.0);
        // Sweep across the contour under the sensor center in small steps;
        // adjacent samples must not jump.
        let mut prev = None;
        for k in -200..200 {
            let p = Vec2::new(k as f64 * 0.01, 0.0);
            let d = indentation_at(&shape, &pose, &cfg, p);
            if let Some(pd) = prev {
                let diff: f64 = d - pd;
                assert!(diff.abs() < 0.05, "jump {} at x={}", diff, p.x);
            }
            prev = Some(d);
        }
    }

    #[test]
    fn identity_when_no_contact_no_shear() {
        let cfg = cfg();
        let field = MarkerField::rest_grid(&cfg);
        let n = field.len();
        let ind = IndentationField {
            depths: vec![0.0; n],
            gradients: vec![Vec2::ZERO; n],
            contact_dist: vec![f64::INFINITY; n],
        };
        let out = deform_markers(&field, &ind, &ShearPerturbation::NONE, &cfg).unwrap();
        assert_eq!(out.deformed_positions, field.rest_positions);
    }

    #[test]
    fn free_air_slide_does_not_move_markers() {
        let cfg = cfg();
        let field = MarkerField::rest_grid(&cfg);
        let n = field.len();
        let ind = IndentationField {
            depths: vec![0.0; n],
            gradients: vec![Vec2::ZERO; n],
            contact_dist: vec![f64::INFINITY; n],
        };
        let out = deform_markers(&field, &ind, &ShearPerturbation::new(1.0, 0.0), &cfg).unwrap();
        assert_eq!(out.deformed_positions, field.rest_positions);
    }

    #[test]
    fn uniform_full_contact_translates_by_shear() {
        let mut cfg = cfg();
        cfg.alpha = 0.0;
        let field = MarkerField::rest_grid(&cfg);
        let n = field.len();
        let ind = IndentationField {
            depths: vec![1.0; n],
            gradients: vec![Vec2::ZERO; n],
            contact_dist: vec![0.0; n],
        };
        let out = deform_markers(&field, &ind, &ShearPerturbation::new(1.0, 0.0), &cfg).unwrap();
        for (r, d) in field.rest_positions.iter().zip(&out.deformed_positions) {
            assert_abs_diff_eq!(d.x - r.x, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(d.y - r.y, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let cfg = cfg();
        let field = MarkerField::rest_grid(&cfg);
        let ind = IndentationField { depths: vec![0.0; 3], gradients: vec![Vec2::ZERO; 3], contact_dist: vec![0.0; 3] };
        assert!(deform_markers(&field, &ind, &ShearPerturbation::NONE, &cfg).is_err());
    }

    #[test]
    fn superposition_exact() {
        // deformed(shear) - deformed(0) = offset * w, componentwise.
        let cfg = cfg();
        let shape = StimulusShape::disk(12.0).anchored_at(0.0);
        let pose = ContactPose::new(-1.0, 0.5, 1.5, 10.0);
        let field = MarkerField::rest_grid(&cfg);
        let ind = indentation_field(&shape, &pose, &cfg, &field.rest_positions);
        let shear = ShearPerturbation::new(1.2, -0.7);
        let with = deform_markers(&field, &ind, &shear, &cfg).unwrap();
        let without = deform_markers(&field, &ind, &ShearPerturbation::NONE, &cfg).unwrap();
        for i in 0..field.len() {
            let diff = with.deformed_positions[i] - without.deformed_positions[i];
            let w = contact_weight(ind.contact_dist[i], cfg.rho_mm);
            assert_abs_diff_eq!(diff.x, shear.offset.x * w, epsilon = 1e-9);
            assert_abs_diff_eq!(diff.y, shear.offset.y * w, epsilon = 1e-9);
        }
    }
}
