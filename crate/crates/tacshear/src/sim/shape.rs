//! Planar stimulus shapes represented as closed polygons with a signed
//! distance function (negative inside, mm units, Lipschitz-1).

use crate::geom::{dist_to_segment, polygon_area, wrap_deg, Pose2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Disk,
    Clover,
    Teardrop,
    Spiral1,
    Spiral2,
    Custom,
}

impl ShapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Disk => "disk",
            ShapeKind::Clover => "clover",
            ShapeKind::Teardrop => "teardrop",
            ShapeKind::Spiral1 => "spiral1",
            ShapeKind::Spiral2 => "spiral2",
            ShapeKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<ShapeKind> {
        Some(match s {
            "disk" => ShapeKind::Disk,
            "clover" => ShapeKind::Clover,
            "teardrop" => ShapeKind::Teardrop,
            "spiral1" => ShapeKind::Spiral1,
            "spiral2" => ShapeKind::Spiral2,
            "custom" => ShapeKind::Custom,
            _ => return None,
        })
    }
}

/// A stimulus: closed polygon boundary in world frame plus an anchor frame
/// on (or near) the contour that contact poses are expressed in.
#[derive(Debug, Clone)]
pub struct StimulusShape {
    pub kind: ShapeKind,
    boundary: Vec<Vec2>,
    cum_len: Vec<f64>,
    pub anchor_pose: Pose2,
}

impl StimulusShape {
    pub fn from_polygon(kind: ShapeKind, mut boundary: Vec<Vec2>) -> Self {
        assert!(boundary.len() >= 3, "polygon needs >= 3 vertices");
        // Contour sampling assumes CCW orientation.
        if polygon_area(&boundary) < 0.0 {
            boundary.reverse();
        }
        let mut cum_len = Vec::with_capacity(boundary.len() + 1);
        let mut acc = 0.0;
        cum_len.push(0.0);
        for i in 0..boundary.len() {
            let j = (i + 1) % boundary.len();
            acc += boundary[i].dist(boundary[j]);
            cum_len.push(acc);
        }
        StimulusShape { kind, boundary, cum_len, anchor_pose: Pose2::IDENTITY }
    }

    /// Circular disk of radius `r`, centered at the origin.
    pub fn disk(r: f64) -> Self {
        Self::from_polygon(ShapeKind::Disk, polar_polygon(512, |_| r))
    }

    /// Three-lobed clover, mean radius `r`.
    pub fn clover(r: f64) -> Self {
        Self::from_polygon(ShapeKind::Clover, polar_polygon(512, |phi| r * (1.0 + 0.28 * (3.0 * phi).cos()))
        )
    }

    /// Rounded teardrop, mean radius `r`.
    pub fn teardrop(r: f64) -> Self {
        Self::from_polygon(
            ShapeKind::Teardrop,
            polar_polygon(512, |phi| r * (1.0 - 0.42 * phi.cos()).max(0.2)),
        )
    }

    /// Archimedean spiral band: centerline r = a + b*t, stroked to `width`.
    pub fn spiral(kind: ShapeKind, a: f64, b: f64, turns: f64, width: f64) -> Self {
        let n = 256;
        let t_max = turns * std::f64::consts::TAU;
        let center: Vec<Vec2> = (0..=n)
            .map(|i| {
                let t = t_max * i as f64 / n as f64;
                let r = a + b * t;
                Vec2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        let half = width / 2.0;
        // Offset the open centerline on both sides to get the band outline.
        let mut left = Vec::with_capacity(center.len());
        let mut right = Vec::with_capacity(center.len());
        for i in 0..center.len() {
            let tangent = if i == 0 {
                center[1] - center[0]
            } else if i == center.len() - 1 {
                center[i] - center[i - 1]
            } else {
                center[i + 1] - center[i - 1]
            }
            .normalized();
            let nrm = tangent.perp();
            left.push(center[i] + nrm.scale(half));
            right.push(center[i] - nrm.scale(half));
        }
        right.reverse();
        left.extend(right);
        Self::from_polygon(kind, left)
    }

    pub fn spiral1() -> Self {
        Self::spiral(ShapeKind::Spiral1, 3.0, 1.1, 1.75, 5.0)
    }

    pub fn spiral2() -> Self {
        Self::spiral(ShapeKind::Spiral2, 2.0, 1.5, 1.5, 6.0)
    }

    pub fn by_kind(kind: ShapeKind) -> Self {
        match kind {
            ShapeKind::Disk => Self::disk(12.0),
            ShapeKind::Clover => Self::clover(11.0),
            ShapeKind::Teardrop => Self::teardrop(11.0),
            ShapeKind::Spiral1 => Self::spiral1(),
            ShapeKind::Spiral2 => Self::spiral2(),
            ShapeKind::Custom => panic!("custom shapes are built from a polygon"),
        }
    }

    pub fn boundary(&self) -> &[Vec2] {
        &self.boundary
    }

    pub fn perimeter(&self) -> f64 {
        *self.cum_len.last().unwrap()
    }

    /// Signed distance in world frame, negative inside.
    pub fn sdf(&self, p: Vec2) -> f64 {
        let n = self.boundary.len();
        let mut d = f64::INFINITY;
        let mut inside = false;
        for i in 0..n {
            let a = self.boundary[i];
            let b = self.boundary[(i + 1) % n];
            d = d.min(dist_to_segment(p, a, b));
            // Even-odd crossing test.
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        if inside {
            -d
        } else {
            d
        }
    }

    /// Point, unit tangent (CCW direction) and outward normal at arclength
    /// `s` along the contour (wrapped to the perimeter).
    pub fn contour_at(&self, s: f64) -> (Vec2, Vec2, Vec2) {
        let total = self.perimeter();
        let mut s = s % total;
        if s < 0.0 {
            s += total;
        }
        let seg = match self.cum_len.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(self.boundary.len() - 1),
            Err(i) => i - 1,
        };
        let a = self.boundary[seg];
        let b = self.boundary[(seg + 1) % self.boundary.len()];
        let seg_len = (b - a).norm();
        let t = if seg_len == 0.0 { 0.0 } else { (s - self.cum_len[seg]) / seg_len };
        let point = a + (b - a).scale(t);
        let tangent = (b - a).normalized();
        // CCW polygon: interior lies left of the tangent, so outward is right.
        let outward = -tangent.perp();
        (point, tangent, outward)
    }

    /// Anchor frame at arclength `s`: origin on the contour, x-axis along the
    /// outward normal, y-axis along the tangent.
    pub fn anchor_at(&self, s: f64) -> Pose2 {
        let (p, _t, n) = self.contour_at(s);
        Pose2 { pos: p, yaw_deg: wrap_deg(n.y.atan2(n.x).to_degrees()) }
    }

    /// Copy with the anchor frame placed at arclength `s`.
    pub fn anchored_at(&self, s: f64) -> StimulusShape {
        let mut out = self.clone();
        out.anchor_pose = self.anchor_at(s);
        out
    }
}

fn polar_polygon(n: usize, r: impl Fn(f64) -> f64) -> Vec<Vec2> {
    (0..n)
        .map(|i| {
            let phi = std::f64::consts::TAU * i as f64 / n as f64;
            let rad = r(phi);
            Vec2::new(rad * phi.cos(), rad * phi.sin())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn disk_sdf_matches_analytic() {
        let d = StimulusShape::disk(12.0);
        for (p, want) in [
            (Vec2::new(0.0, 0.0), -12.0),
            (Vec2::new(15.0, 0.0), 3.0),
            (Vec2::new(0.0, 6.0), -6.0),
        ] {
            // 512-gon vs circle: sub-micron deviation at this radius.
            assert_abs_diff_eq!(d.sdf(p), want, epsilon = 2e-3);
        }
    }

    #[test]
    fn sdf_is_lipschitz_1() {
        let shapes =
            [StimulusShape::disk(12.0), StimulusShape::clover(11.0), StimulusShape::teardrop(11.0), StimulusShape::spiral1()];
        let mut st = crate::rng::Stream::new(11, "lipschitz");
        for sh in &shapes {
            for _ in 0..300 {
                let p = Vec2::new(st.uniform_in(-20.0, 20.0), st.uniform_in(-20.0, 20.0));
                let q = Vec2::new(st.uniform_in(-20.0, 20.0), st.uniform_in(-20.0, 20.0));
                assert!((sh.sdf(p) - sh.sdf(q)).abs() <= p.dist(q) + 1e-9);
            }
        }
    }

    #[test]
    fn contour_points_lie_on_zero_level() {
        let sh = StimulusShape::clover(11.0);
        for i in 0..20 {
            let s = sh.perimeter() * i as f64 / 20.0;
            let (p, _, _) = sh.contour_at(s);
            assert!(sh.sdf(p).abs() < 1e-9, "sdf at contour = {}", sh.sdf(p));
        }
    }

    #[test]
    fn anchor_outward_normal_points_outside() {
        for sh in [StimulusShape::disk(12.0), StimulusShape::teardrop(11.0)] {
            for i in 0..16 {
                let s = sh.perimeter() * i as f64 / 16.0;
                let (p, _, n) = sh.contour_at(s);
                assert!(sh.sdf(p + n.scale(0.5)) > 0.0);
                assert!(sh.sdf(p - n.scale(0.5)) < 0.0);
            }
        }
    }

    #[test]
    fn disk_perimeter_close_to_circumference() {
        let d = StimulusShape::disk(12.0);
        assert_abs_diff_eq!(d.perimeter(), 2.0 * std::f64::consts::PI * 12.0, epsilon = 0.02);
    }
}
