//! Scattered-data surface fitting: Delaunay triangulation of the marker
//! centroids and a cubic Bezier-triangle interpolant with estimated vertex
//! gradients. Outside the convex hull the surface is clamped to zero.

use crate::geom::Vec2;
pub use crate::geom::Pose2;
use crate::geometry::voronoi::VoronoiField;
use crate::geometry::GeomError;

/// Uniform square sampling grid centered on the origin, n points per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_extent_mm: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(half_extent_mm: f64, n: usize) -> Self {
        assert!(n >= 2 && half_extent_mm > 0.0);
        GridSpec { half_extent_mm, n }
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_extent_mm / (self.n - 1) as f64
    }

    /// Grid point at (row, col); rows advance along +y, columns along +x.
    pub fn point(&self, row: usize, col: usize) -> Vec2 {
        Vec2::new(
            -self.half_extent_mm + col as f64 * self.step(),
            -self.half_extent_mm + row as f64 * self.step(),
        )
    }

    /// Nearest (row, col) bin for a point, or None if out of range.
    pub fn bin(&self, p: Vec2) -> Option<(usize, usize)> {
        let col = ((p.x + self.half_extent_mm) / self.step()).round();
        let row = ((p.y + self.half_extent_mm) / self.step()).round();
        if col < 0.0 || row < 0.0 || col >= self.n as f64 || row >= self.n as f64 {
            None
        } else {
            Some((row as usize, col as usize))
        }
    }
}

/// A height field sampled on a local grid, tagged with the sensor pose it
/// was captured at.
#[derive(Debug, Clone)]
pub struct LocalSurface {
    pub grid: GridSpec,
    pub heights: Vec<f64>,
    pub pose_tag: Pose2,
}

#[derive(Debug, Clone, Copy)]
struct Tri(usize, usize, usize);

/// Delaunay triangulation via incremental insertion: for each new point,
/// remove every triangle whose circumcircle contains it and retriangulate
/// the resulting cavity boundary.
fn delaunay(pts: &[Vec2]) -> Result<Vec<Tri>, GeomError> {
    if pts.len() < 3 {
        return Err(GeomError::Degenerate(format!("need at least 3 points, got {}", pts.len())));
    }
    // Oversized enclosing triangle; its vertices live past the real points.
    let max_r = pts.iter().map(|p| p.norm()).fold(0.0f64, f64::max).max(1.0);
    let m = 64.0 * max_r;
    let n = pts.len();
    let mut all: Vec<Vec2> = pts.to_vec();
    all.push(Vec2::new(-m, -m));
    all.push(Vec2::new(m, -m));
    all.push(Vec2::new(0.0, m));
    let mut tris = vec![Tri(n, n + 1, n + 2)];
    for (pi, &p) in pts.iter().enumerate() {
        let mut bad: Vec<usize> = Vec::new();
        for (ti, t) in tris.iter().enumerate() {
            if in_circumcircle(all[t.0], all[t.1], all[t.2], p) {
                bad.push(ti);
            }
        }
        if bad.is_empty() {
            return Err(GeomError::Degenerate("point outside all circumcircles".into()));
        }
        // Cavity boundary: edges of bad triangles not shared by two of them.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &ti in &bad {
            let t = tris[ti];
            for e in [(t.0, t.1), (t.1, t.2), (t.2, t.0)] {
                if let Some(k) = edges.iter().position(|&(a, b)| (a, b) == (e.1, e.0) || (a, b) == e) {
                    edges.swap_remove(k);
                } else {
                    edges.push(e);
                }
            }
        }
        for &ti in bad.iter().rev() {
            tris.swap_remove(ti);
        }
        for (a, b) in edges {
            tris.push(Tri(a, b, pi));
        }
    }
    tris.retain(|t| t.0 < n && t.1 < n && t.2 < n);
    if tris.is_empty() {
        return Err(GeomError::Degenerate("all points collinear".into()));
    }
    Ok(tris)
}

fn in_circumcircle(a: Vec2, b: Vec2, c: Vec2, p: Vec2) -> bool {
    // Standard determinant test, sign-corrected for triangle orientation.
    let (ax, ay) = (a.x - p.x, a.y - p.y);
    let (bx, by) = (b.x - p.x, b.y - p.y);
    let (cx, cy) = (c.x - p.x, c.y - p.y);
    let det = (ax * ax + ay * ay) * (bx * cy - cx * by)
        - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay);
    let orient = (b - a).cross(c - a);
    det * orient.signum() > 1e-12
}

/// Cubic interpolant over a triangulated scattered point set.
pub struct Interpolator {
    pts: Vec<Vec2>,
    vals: Vec<f64>,
    grads: Vec<Vec2>,
    tris: Vec<Tri>,
}

impl Interpolator {
    pub fn new(pts: &[Vec2], vals: &[f64]) -> Result<Self, GeomError> {
        if pts.len() != vals.len() {
            return Err(GeomError::Degenerate(format!(
                "{} points vs {} values",
                pts.len(),
                vals.len()
            )));
        }
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[i].dist(pts[j]) < 1e-9 {
                    return Err(GeomError::DuplicateMarkers { a: i, b: j });
                }
            }
        }
        let tris = delaunay(pts)?;
        let grads = estimate_gradients(pts, vals, &tris);
        Ok(Interpolator { pts: pts.to_vec(), vals: vals.to_vec(), grads, tris })
    }

    /// Interpolated value at p; zero outside the convex hull of the data.
    pub fn eval(&self, p: Vec2) -> f64 {
        let eps = 1e-9;
        for t in &self.tris {
            let (a, b, c) = (self.pts[t.0], self.pts[t.1], self.pts[t.2]);
            let area = (b - a).cross(c - a);
            if area.abs() < 1e-12 {
                continue;
            }
            let u = (b - p).cross(c - p) / area;
            let v = (c - p).cross(a - p) / area;
            let w = 1.0 - u - v;
            if u >= -eps && v >= -eps && w >= -eps {
                return self.eval_in(*t, u, v, w);
            }
        }
        0.0
    }

    /// Cubic Bezier triangle from vertex values and gradients. Edge control
    /// points come from the gradient projected a third of the way along
    /// each edge; the interior point uses the quadratic-consistency average.
    fn eval_in(&self, t: Tri, u: f64, v: f64, w: f64) -> f64 {
        let (p0, p1, p2) = (self.pts[t.0], self.pts[t.1], self.pts[t.2]);
        let (z0, z1, z2) = (self.vals[t.0], self.vals[t.1], self.vals[t.2]);
        let (g0, g1, g2) = (self.grads[t.0], self.grads[t.1], self.grads[t.2]);
        let b300 = z0;
        let b030 = z1;
        let b003 = z2;
        let b210 = z0 + g0.dot(p1 - p0) / 3.0;
        let b201 = z0 + g0.dot(p2 - p0) / 3.0;
        let b120 = z1 + g1.dot(p0 - p1) / 3.0;
        let b021 = z1 + g1.dot(p2 - p1) / 3.0;
        let b102 = z2 + g2.dot(p0 - p2) / 3.0;
        let b012 = z2 + g2.dot(p1 - p2) / 3.0;
        let b111 = (b210 + b120 + b021 + b012 + b102 + b201) / 4.0 - (b300 + b030 + b003) / 6.0;
        b300 * u * u * u
            + b030 * v * v * v
            + b003 * w * w * w
            + 3.0 * (b210 * u * u * v
                + b201 * u * u * w
                + b120 * u * v * v
                + b021 * v * v * w
                + b102 * u * w * w
                + b012 * v * w * w)
            + 6.0 * b111 * u * v * w
    }
}

/// Per-vertex gradient by least-squares plane fit over triangulation
/// neighbours. Degenerate neighbourhoods fall back to a zero gradient,
/// which reduces the patch to linear behaviour there.
fn estimate_gradients(pts: &[Vec2], vals: &[f64], tris: &[Tri]) -> Vec<Vec2> {
    let n = pts.len();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let add = |a: usize, b: usize, nbrs: &mut Vec<Vec<usize>>| {
        if !nbrs[a].contains(&b) {
            nbrs[a].push(b);
        }
    };
    for t in tris {
        for (a, b) in [(t.0, t.1), (t.1, t.2), (t.2, t.0)] {
            add(a, b, &mut nbrs);
            add(b, a, &mut nbrs);
        }
    }
    (0..n)
        .map(|i| {
            let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &j in &nbrs[i] {
                let d = pts[j] - pts[i];
                let dz = vals[j] - vals[i];
                sxx += d.x * d.x;
                sxy += d.x * d.y;
                syy += d.y * d.y;
                sxz += d.x * dz;
                syz += d.y * dz;
            }
            let det = sxx * syy - sxy * sxy;
            if det.abs() < 1e-12 {
                Vec2::ZERO
            } else {
                Vec2::new((sxz * syy - syz * sxy) / det, (syz * sxx - sxz * sxy) / det)
            }
        })
        .collect()
}

/// Fit a height field to the Voronoi area deltas and sample it on a grid.
///
/// Shrinking cells mark where the elastomer is being pressed, so height is
/// the negated area change.
pub fn fit_local_surface(
    field: &VoronoiField,
    grid: &GridSpec,
    pose_tag: Pose2,
) -> Result<LocalSurface, GeomError> {
    let values: Vec<f64> = field.delta_areas.iter().map(|&d| -d).collect();
    let interp = Interpolator::new(&field.centroids, &values)?;
    let mut heights = Vec::with_capacity(grid.n * grid.n);
    for row in 0..grid.n {
        for col in 0..grid.n {
            heights.push(interp.eval(grid.point(row, col)));
        }
    }
    Ok(LocalSurface { grid: *grid, heights, pose_tag }.normalize_grid())
}

impl LocalSurface {
    fn normalize_grid(mut self) -> Self {
        for h in &mut self.heights {
            if h.abs() < 1e-15 {
                *h = 0.0;
            }
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn jittered_grid(n_side: usize, rng: &mut Stream) -> Vec<Vec2> {
        let mut pts = Vec::new();
        for i in 0..n_side {
            for j in 0..n_side {
                pts.push(Vec2::new(
                    j as f64 + 0.3 * (rng.uniform() - 0.5),
                    i as f64 + 0.3 * (rng.uniform() - 0.5),
                ));
            }
        }
        pts
    }

    #[test]
    fn delaunay_satisfies_empty_circumcircle_property() {
        let mut rng = Stream::new(11, "delaunay");
        let pts = jittered_grid(6, &mut rng);
        let tris = delaunay(&pts).unwrap();
        for t in &tris {
            for (k, &p) in pts.iter().enumerate() {
                if k == t.0 || k == t.1 || k == t.2 {
                    continue;
                }
                assert!(
                    !in_circumcircle(pts[t.0], pts[t.1], pts[t.2], p),
                    "point {k} inside circumcircle of ({},{},{})",
                    t.0,
                    t.1,
                    t.2
                );
            }
        }
        // Euler: a triangulated point set with h hull vertices has
        // 2n - 2 - h triangles. With 36 points this pins the count range.
        assert!(tris.len() >= 2 * pts.len() - 2 - pts.len());
    }

    #[test]
    fn interpolates_data_points_exactly() {
        let mut rng = Stream::new(3, "interp");
        let pts = jittered_grid(5, &mut rng);
        let vals: Vec<f64> = pts.iter().map(|p| (0.7 * p.x).sin() + 0.2 * p.y * p.y).collect();
        let interp = Interpolator::new(&pts, &vals).unwrap();
        for (p, &v) in pts.iter().zip(&vals) {
            assert!((interp.eval(*p) - v).abs() < 1e-6, "at {p:?}: {} vs {v}", interp.eval(*p));
        }
    }

    #[test]
    fn zero_outside_hull() {
        let pts = vec![Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0)];
        let vals = vec![1.0, 2.0, 3.0, 4.0];
        let interp = Interpolator::new(&pts, &vals).unwrap();
        assert_eq!(interp.eval(Vec2::new(5.0, 5.0)), 0.0);
        assert_eq!(interp.eval(Vec2::new(-1.0, 0.5)), 0.0);
        assert!(interp.eval(Vec2::new(0.5, 0.5)).abs() > 0.0);
    }

    #[test]
    fn duplicate_points_rejected() {
        let pts = vec![Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::ZERO, Vec2::new(0.0, 1.0)];
        let vals = vec![0.0; 4];
        assert!(matches!(Interpolator::new(&pts, &vals), Err(GeomError::DuplicateMarkers { .. })));
    }

    #[test]
    fn collinear_points_rejected() {
        let pts: Vec<Vec2> = (0..5).map(|i| Vec2::new(i as f64, 2.0 * i as f64)).collect();
        let vals = vec![0.0; 5];
        assert!(Interpolator::new(&pts, &vals).is_err());
    }

    fn bump_field(center: Vec2) -> VoronoiField {
        let cfg = crate::sim::SensorConfig::default();
        let centroids = crate::sim::MarkerField::rest_grid(&cfg).rest_positions;
        let delta_areas: Vec<f64> = centroids
            .iter()
            .map(|p| {
                let d2 = p.dist(center).powi(2);
                -(-d2 / 4.0).exp()
            })
            .collect();
        let n = centroids.len();
        VoronoiField {
            centroids,
            cell_areas: vec![0.0; n],
            rest_areas: vec![0.0; n],
            delta_areas,
            boundary_mask: vec![false; n],
        }
    }

    #[test]
    fn zero_deltas_give_zero_surface() {
        let mut field = bump_field(Vec2::ZERO);
        field.delta_areas = vec![0.0; field.centroids.len()];
        let grid = GridSpec::new(10.0, 33);
        let surf = fit_local_surface(&field, &grid, Pose2::IDENTITY).unwrap();
        assert!(surf.heights.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn bump_peak_lands_near_its_center() {
        let cfg = crate::sim::SensorConfig::default();
        let center = Vec2::new(2.0, -1.5);
        let field = bump_field(center);
        let grid = GridSpec::new(10.0, 81);
        let surf = fit_local_surface(&field, &grid, Pose2::IDENTITY).unwrap();
        let (mut best, mut best_h) = ((0, 0), f64::MIN);
        for row in 0..grid.n {
            for col in 0..grid.n {
                let h = surf.heights[row * grid.n + col];
                if h > best_h {
                    best_h = h;
                    best = (row, col);
                }
            }
        }
        let peak = grid.point(best.0, best.1);
        assert!(
            peak.dist(center) < cfg.marker_pitch_mm(),
            "peak {peak:?} vs center {center:?}"
        );
    }

    #[test]
    fn grid_bins_round_trip() {
        let grid = GridSpec::new(5.0, 21);
        for row in 0..grid.n {
            for col in 0..grid.n {
                assert_eq!(grid.bin(grid.point(row, col)), Some((row, col)));
            }
        }
        assert_eq!(grid.bin(Vec2::new(99.0, 0.0)), None);
    }
}
