//! The sense-unshear-predict-move exploration loop.

use crate::geom::Vec2;
use crate::geometry::{surface_from_image, GridSpec, LocalSurface};
use crate::models::UnshearModel;
use crate::nn::Params;
use crate::posenet::{PoseNet, PosePrediction};
use crate::servo::control::{compute_error, pi_step, ControllerState};
use crate::servo::ServoError;
use crate::sim::{sense_slide, sense_tap, BinaryImage, ContactPose, SensorConfig, ShearPerturbation, StimulusShape};
use crate::tensor::Tensor;

/// Everything known about the frame being restored, for oracles that need
/// more than the pixels.
pub struct UnshearContext<'a> {
    pub shape: &'a StimulusShape,
    pub pose: &'a ContactPose,
    pub sensor: &'a SensorConfig,
}

/// Produces the canonical-looking image the predictor and surface capture
/// consume. The identity variant feeds the raw frame through, which is the
/// right baseline when probing the controller alone.
pub trait Unshearer {
    fn unshear(&self, sheared: &BinaryImage, ctx: &UnshearContext) -> Result<Tensor<f32>, ServoError>;
}

pub struct IdentityUnshearer;

impl Unshearer for IdentityUnshearer {
    fn unshear(&self, sheared: &BinaryImage, _ctx: &UnshearContext) -> Result<Tensor<f32>, ServoError> {
        Ok(Tensor::from_vec(&[sheared.height, sheared.width], sheared.to_f32()))
    }
}

/// Perfect restoration: renders the tap frame the slide frame came from.
pub struct OracleUnshearer;

impl Unshearer for OracleUnshearer {
    fn unshear(&self, _sheared: &BinaryImage, ctx: &UnshearContext) -> Result<Tensor<f32>, ServoError> {
        let tap = sense_tap(ctx.shape, ctx.pose, 0, ctx.sensor)?;
        Ok(Tensor::from_vec(&[tap.raster.height, tap.raster.width], tap.raster.to_f32()))
    }
}

pub struct NetUnshearer<'a> {
    pub model: &'a UnshearModel,
    pub params: &'a Params<f32>,
}

impl Unshearer for NetUnshearer<'_> {
    fn unshear(&self, sheared: &BinaryImage, _ctx: &UnshearContext) -> Result<Tensor<f32>, ServoError> {
        let x = Tensor::from_vec(&[sheared.height, sheared.width], sheared.to_f32());
        Ok(self.model.unshear(self.params, &x)?)
    }
}

/// Pose estimate for one frame. The true relative pose is passed alongside
/// the image so a test oracle can stand in for the trained network.
pub trait PosePredictor {
    fn predict(&self, unsheared: &Tensor<f32>, truth: &ContactPose) -> Result<PosePrediction, ServoError>;
}

pub struct NetPredictor<'a> {
    pub model: &'a PoseNet,
    pub params: &'a Params<f32>,
}

impl PosePredictor for NetPredictor<'_> {
    fn predict(&self, unsheared: &Tensor<f32>, _truth: &ContactPose) -> Result<PosePrediction, ServoError> {
        Ok(self.model.predict(self.params, unsheared)?)
    }
}

/// Perfect predictor: reads the simulator's ground truth.
pub struct OraclePredictor;

impl PosePredictor for OraclePredictor {
    fn predict(&self, _unsheared: &Tensor<f32>, truth: &ContactPose) -> Result<PosePrediction, ServoError> {
        Ok(PosePrediction { tau_x_mm: truth.x_mm, yaw_deg: truth.yaw_deg, normalized: false })
    }
}

#[derive(Debug, Clone)]
pub struct ExploreConfig {
    pub depth_mm: f64,
    pub surface_grid: GridSpec,
    pub capture_surfaces: bool,
    pub closure_radius_mm: f64,
    /// Fraction of the estimated perimeter step count before closure counts.
    pub closure_fraction: f64,
    /// Consecutive out-of-range predictions before declaring contact lost.
    pub lost_contact_limit: usize,
    pub dp_max_mm: f64,
    pub dp_max_deg: f64,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            depth_mm: 2.0,
            surface_grid: GridSpec::new(10.0, 33),
            capture_surfaces: true,
            closure_radius_mm: 1.5,
            closure_fraction: 0.75,
            lost_contact_limit: 5,
            dp_max_mm: 2.0,
            dp_max_deg: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub step: usize,
    pub x_mm: f64,
    pub y_mm: f64,
    pub yaw_deg: f64,
    pub pred_tau_x_mm: f64,
    pub pred_yaw_deg: f64,
    pub e_tau_x: f64,
    pub e_yaw: f64,
    pub dp_trans_mm: f64,
    pub dp_rot_deg: f64,
    pub shear_x_mm: f64,
    pub shear_y_mm: f64,
    pub contact: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TrajectoryLog {
    pub rows: Vec<StepRow>,
    pub closed: bool,
    pub aborted: Option<String>,
}

impl TrajectoryLog {
    pub fn csv(&self) -> String {
        let mut out = String::from(
            "step,x_mm,y_mm,yaw_deg,pred_tau_x_mm,pred_yaw_deg,e_tau_x,e_yaw,dp_trans_mm,dp_rot_deg,shear_x_mm,shear_y_mm,contact\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
                r.step,
                r.x_mm,
                r.y_mm,
                r.yaw_deg,
                r.pred_tau_x_mm,
                r.pred_yaw_deg,
                r.e_tau_x,
                r.e_yaw,
                r.dp_trans_mm,
                r.dp_rot_deg,
                r.shear_x_mm,
                r.shear_y_mm,
                if r.contact { 1 } else { 0 }
            ));
        }
        out
    }
}

#[derive(Debug)]
pub struct ExploreOutcome {
    pub log: TrajectoryLog,
    pub surfaces: Vec<LocalSurface>,
}

/// Arclength of the contour point nearest to `p` (world frame).
fn nearest_arclength(shape: &StimulusShape, p: Vec2) -> f64 {
    let b = shape.boundary();
    let n = b.len();
    let mut cum = 0.0;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..n {
        let a = b[i];
        let q = b[(i + 1) % n];
        let ab = q - a;
        let len = ab.norm();
        let t = if len == 0.0 { 0.0 } else { ((p - a).dot(ab) / (len * len)).clamp(0.0, 1.0) };
        let proj = a + ab.scale(t);
        let d = p.dist(proj);
        if d < best.0 {
            best = (d, cum + t * len);
        }
        cum += len;
    }
    best.1
}

fn wrap_deg(a: f64) -> f64 {
    let mut a = a % 360.0;
    if a >= 180.0 {
        a -= 360.0;
    }
    if a < -180.0 {
        a += 360.0;
    }
    a
}

/// Follow the contour of `shape` starting at arclength `start_s`.
///
/// The stimulus polygon lives in the world frame; the sensor pose is tracked
/// in the world frame and re-expressed each step relative to the nearest
/// contour anchor, which is the frame the pose networks were trained in.
/// Lateral slide accumulates in the sensor frame between reseats and
/// saturates at the configured shear limit, standing in for skin slip.
pub fn explore(
    shape: &StimulusShape,
    start_s: f64,
    unshearer: &dyn Unshearer,
    predictor: &dyn PosePredictor,
    sensor: &SensorConfig,
    cfg: &ExploreConfig,
    max_steps: usize,
) -> Result<ExploreOutcome, ServoError> {
    let mut state = ControllerState::default();
    state.reset();
    let mut w = shape.anchor_at(start_s);
    let start_pos = w.pos;
    let min_steps =
        ((cfg.closure_fraction * shape.perimeter() / state.step_length_mm).ceil()) as usize;
    let mut log = TrajectoryLog::default();
    let mut surfaces = Vec::new();
    let mut shear_acc = Vec2::ZERO;
    let mut lost = 0usize;

    for step in 0..max_steps {
        let s = nearest_arclength(shape, w.pos);
        let anchored = shape.anchored_at(s);
        let rel = anchored.anchor_pose.inverse().compose(&w);
        let pose = ContactPose::new(rel.pos.x, rel.pos.y, cfg.depth_mm, wrap_deg(rel.yaw_deg));
        if pose.validate(sensor).is_err() {
            log.aborted = Some(format!("sensor left the edge at step {step}"));
            break;
        }
        let clamp = sensor.shear_max_mm;
        let shear = ShearPerturbation::new(
            shear_acc.x.clamp(-clamp, clamp),
            shear_acc.y.clamp(-clamp, clamp),
        );
        let frame = sense_slide(&anchored, &pose, &shear, 0, sensor)?;
        let ctx = UnshearContext { shape: &anchored, pose: &pose, sensor };
        let unsheared = unshearer.unshear(&frame.raster, &ctx)?;
        let pred = predictor.predict(&unsheared, &pose)?;
        let contact = pred.tau_x_mm.abs() <= sensor.pose_range_mm;
        if contact {
            lost = 0;
        } else {
            lost += 1;
        }
        let e = compute_error(&pred);
        let dp_raw = pi_step(&mut state, e)?;
        let dp = [
            dp_raw[0].clamp(-cfg.dp_max_mm, cfg.dp_max_mm),
            dp_raw[1].clamp(-cfg.dp_max_deg, cfg.dp_max_deg),
        ];
        log.rows.push(StepRow {
            step,
            x_mm: w.pos.x,
            y_mm: w.pos.y,
            yaw_deg: w.yaw_deg,
            pred_tau_x_mm: pred.tau_x_mm,
            pred_yaw_deg: pred.yaw_deg,
            e_tau_x: e[0],
            e_yaw: e[1],
            dp_trans_mm: dp[0],
            dp_rot_deg: dp[1],
            shear_x_mm: shear.offset.x,
            shear_y_mm: shear.offset.y,
            contact,
        });
        if cfg.capture_surfaces {
            let mut img = BinaryImage::zeros(frame.raster.height, frame.raster.width);
            for (dst, &v) in img.pixels.iter_mut().zip(unsheared.data()) {
                *dst = if v >= 0.5 { 1 } else { 0 };
            }
            surfaces.push(surface_from_image(&img, sensor, &cfg.surface_grid, w)?);
        }
        if lost >= cfg.lost_contact_limit {
            log.aborted = Some(format!("contact lost at step {step}"));
            break;
        }
        // Corrective move along the sensor's normal axis, tangential
        // advance along its edge axis.
        let delta_sensor = Vec2::new(-dp[0], state.step_length_mm);
        w.pos = w.pos + w.apply_dir(delta_sensor);
        w.yaw_deg = wrap_deg(w.yaw_deg - dp[1]);
        // The skin sticks to the object, so the imprint lags the motion.
        shear_acc = shear_acc - delta_sensor;
        if step + 1 >= min_steps && w.pos.dist(start_pos) <= cfg.closure_radius_mm {
            log.closed = true;
            break;
        }
    }
    Ok(ExploreOutcome { log, surfaces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ShapeKind;

    fn disk() -> StimulusShape {
        StimulusShape::by_kind(ShapeKind::Disk)
    }

    fn fast_cfg() -> ExploreConfig {
        ExploreConfig { capture_surfaces: false, ..ExploreConfig::default() }
    }

    #[test]
    fn zero_steps_means_empty_log() {
        let out = explore(
            &disk(),
            0.0,
            &IdentityUnshearer,
            &OraclePredictor,
            &SensorConfig::default(),
            &fast_cfg(),
            0,
        )
        .unwrap();
        assert!(out.log.rows.is_empty());
        assert!(out.surfaces.is_empty());
        assert!(!out.log.closed);
    }

    #[test]
    fn oracle_loop_closes_on_the_disk() {
        let shape = disk();
        let sensor = SensorConfig::default();
        let out =
            explore(&shape, 0.0, &IdentityUnshearer, &OraclePredictor, &sensor, &fast_cfg(), 400)
                .unwrap();
        assert!(out.log.closed, "aborted: {:?}, steps {}", out.log.aborted, out.log.rows.len());
        // Every visited position should hug the contour.
        let mut sum = 0.0;
        for r in &out.log.rows {
            sum += shape.sdf(Vec2::new(r.x_mm, r.y_mm)).abs();
        }
        let mean_radial = sum / out.log.rows.len() as f64;
        assert!(mean_radial < 0.25, "mean radial error {mean_radial}");
    }

    #[test]
    fn frames_carry_accumulated_shear() {
        let out = explore(
            &disk(),
            0.0,
            &IdentityUnshearer,
            &OraclePredictor,
            &SensorConfig::default(),
            &fast_cfg(),
            10,
        )
        .unwrap();
        // First frame is pristine; every later frame sees the slide offset
        // built up by the tangential advance.
        assert_eq!(out.log.rows[0].shear_y_mm, 0.0);
        assert!(out.log.rows[1..].iter().all(|r| r.shear_y_mm.abs() > 0.0));
    }

    #[test]
    fn heading_error_stays_bounded_over_many_laps() {
        let shape = disk();
        let sensor = SensorConfig::default();
        let perimeter_steps = (shape.perimeter() / 0.5).ceil() as usize;
        let cfg = ExploreConfig { closure_radius_mm: 0.0, ..fast_cfg() };
        let out = explore(
            &shape,
            0.0,
            &IdentityUnshearer,
            &OraclePredictor,
            &sensor,
            &cfg,
            4 * perimeter_steps,
        )
        .unwrap();
        assert!(out.log.aborted.is_none(), "{:?}", out.log.aborted);
        assert_eq!(out.log.rows.len(), 4 * perimeter_steps);
        for r in &out.log.rows {
            assert!(r.e_yaw.abs() < 20.0, "heading error diverged: {r:?}");
            assert!(r.e_tau_x.abs() < 2.0, "radial error diverged: {r:?}");
        }
    }

    #[test]
    fn surfaces_are_captured_with_world_pose_tags() {
        let out = explore(
            &disk(),
            0.0,
            &IdentityUnshearer,
            &OraclePredictor,
            &SensorConfig::default(),
            &ExploreConfig::default(),
            3,
        )
        .unwrap();
        assert_eq!(out.surfaces.len(), 3);
        for (r, s) in out.log.rows.iter().zip(&out.surfaces) {
            assert!((s.pose_tag.pos.x - r.x_mm).abs() < 1e-12);
            assert!((s.pose_tag.pos.y - r.y_mm).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_has_header_and_one_line_per_step() {
        let out = explore(
            &disk(),
            0.0,
            &IdentityUnshearer,
            &OraclePredictor,
            &SensorConfig::default(),
            &fast_cfg(),
            5,
        )
        .unwrap();
        let csv = out.log.csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("step,x_mm,y_mm,yaw_deg,"));
        assert!(lines[1].starts_with("0,"));
    }
}
