//! Plane geometry primitives shared by the simulator, geometry
//! reconstruction and servo loop. Millimetres and degrees throughout.

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n == 0.0 { Vec2::ZERO } else { self.scale(1.0 / n) }
    }

    /// Rotate counter-clockwise by `deg` degrees.
    pub fn rotated(self, deg: f64) -> Vec2 {
        let (s, c) = deg.to_radians().sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Perpendicular, counter-clockwise.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Rigid 2D transform: rotation by `yaw_deg` then translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub pos: Vec2,
    pub yaw_deg: f64,
}

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 { pos: Vec2::ZERO, yaw_deg: 0.0 };

    pub fn new(x: f64, y: f64, yaw_deg: f64) -> Self {
        Pose2 { pos: Vec2::new(x, y), yaw_deg }
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        p.rotated(self.yaw_deg) + self.pos
    }

    /// Rotate a direction vector without translating.
    pub fn apply_dir(&self, v: Vec2) -> Vec2 {
        v.rotated(self.yaw_deg)
    }

    /// `self` then `child`: maps child-frame points into this frame's parent.
    pub fn compose(&self, child: &Pose2) -> Pose2 {
        Pose2 { pos: self.apply(child.pos), yaw_deg: self.yaw_deg + child.yaw_deg }
    }

    pub fn inverse(&self) -> Pose2 {
        let p = (-self.pos).rotated(-self.yaw_deg);
        Pose2 { pos: p, yaw_deg: -self.yaw_deg }
    }
}

/// Wrap an angle to (-180, 180].
pub fn wrap_deg(a: f64) -> f64 {
    let mut a = a % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Area of a simple polygon via the shoelace formula (positive if CCW).
pub fn polygon_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += pts[i].cross(pts[(i + 1) % n]);
    }
    0.5 * acc
}

/// Distance from `p` to segment `ab`.
pub fn dist_to_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let t = if ab.dot(ab) == 0.0 { 0.0 } else { ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0) };
    (p - (a + ab.scale(t))).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn compose_inverse_is_identity() {
        let a = Pose2::new(3.0, -2.0, 37.0);
        let p = Vec2::new(1.5, 4.0);
        let q = a.inverse().apply(a.apply(p));
        assert_abs_diff_eq!(q.x, p.x, epsilon = 1e-12);
        assert_abs_diff_eq!(q.y, p.y, epsilon = 1e-12);
    }

    #[test]
    fn shoelace_unit_square() {
        let sq = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)];
        assert_abs_diff_eq!(polygon_area(&sq), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn wrap_deg_range() {
        assert_abs_diff_eq!(wrap_deg(190.0), -170.0);
        assert_abs_diff_eq!(wrap_deg(-190.0), 170.0);
        assert_abs_diff_eq!(wrap_deg(180.0), 180.0);
    }
}
