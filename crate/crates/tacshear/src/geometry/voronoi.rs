//! Bounded Voronoi tessellation of the marker field, clipped to the sensor
//! aperture, and the cell-area deltas that stand in for indentation height.

use crate::geom::{polygon_area, Vec2};
use crate::geometry::GeomError;

/// Per-marker Voronoi cells for a deformed field against its rest state.
#[derive(Debug, Clone)]
pub struct VoronoiField {
    /// Marker positions the cells were built around (deformed state).
    pub centroids: Vec<Vec2>,
    /// Clipped cell area per marker, deformed state (mm^2).
    pub cell_areas: Vec<f64>,
    /// Same cells computed at the rest positions (mm^2).
    pub rest_areas: Vec<f64>,
    /// Deformed minus rest area per cell (mm^2).
    pub delta_areas: Vec<f64>,
    /// True for cells that touch the clip boundary.
    pub boundary_mask: Vec<bool>,
}

/// Regular 64-gon approximating the aperture circle.
pub fn aperture_polygon(radius_mm: f64) -> Vec<Vec2> {
    let n = 64;
    (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            Vec2::new(radius_mm * a.cos(), radius_mm * a.sin())
        })
        .collect()
}

/// Clip a convex polygon by the half-plane {p : (p - mid) . n <= 0}.
fn clip_half_plane(poly: &[Vec2], mid: Vec2, normal: Vec2) -> Vec<Vec2> {
    let inside = |p: Vec2| (p - mid).dot(normal) <= 0.0;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ia, ib) = (inside(a), inside(b));
        if ia {
            out.push(a);
        }
        if ia != ib {
            let da = (a - mid).dot(normal);
            let db = (b - mid).dot(normal);
            let t = da / (da - db);
            out.push(Vec2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
    }
    out
}

/// One clipped Voronoi cell: sequential half-plane cuts against every other
/// site, starting from the clip polygon.
fn cell_polygon(sites: &[Vec2], idx: usize, clip: &[Vec2]) -> Vec<Vec2> {
    let me = sites[idx];
    let mut poly = clip.to_vec();
    for (j, &other) in sites.iter().enumerate() {
        if j == idx || poly.is_empty() {
            continue;
        }
        let mid = Vec2::new(0.5 * (me.x + other.x), 0.5 * (me.y + other.y));
        let normal = other - me;
        poly = clip_half_plane(&poly, mid, normal);
    }
    poly
}

fn validate_sites(sites: &[Vec2]) -> Result<(), GeomError> {
    if sites.len() < 4 {
        return Err(GeomError::Degenerate(format!("need at least 4 markers, got {}", sites.len())));
    }
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            if sites[i].dist(sites[j]) < 1e-9 {
                return Err(GeomError::DuplicateMarkers { a: i, b: j });
            }
        }
    }
    let a = sites[0];
    let b = sites[1];
    let collinear = sites.iter().all(|&p| (b - a).cross(p - a).abs() < 1e-9);
    if collinear {
        return Err(GeomError::Degenerate("all markers collinear".into()));
    }
    Ok(())
}

fn touches_boundary(cell: &[Vec2], clip: &[Vec2]) -> bool {
    // A cell touches the clip boundary if any of its vertices lies on a clip
    // edge (half-plane cuts always create vertices strictly inside).
    let eps = 1e-9;
    cell.iter().any(|&v| {
        (0..clip.len()).any(|i| {
            let a = clip[i];
            let b = clip[(i + 1) % clip.len()];
            let ab = b - a;
            let t = (v - a).dot(ab) / ab.dot(ab);
            if !(0.0..=1.0).contains(&t) {
                return false;
            }
            let proj = Vec2::new(a.x + t * ab.x, a.y + t * ab.y);
            proj.dist(v) < eps
        })
    })
}

fn areas_for(sites: &[Vec2], clip: &[Vec2]) -> (Vec<f64>, Vec<bool>) {
    let mut areas = Vec::with_capacity(sites.len());
    let mut boundary = Vec::with_capacity(sites.len());
    for i in 0..sites.len() {
        let cell = cell_polygon(sites, i, clip);
        areas.push(polygon_area(&cell).abs());
        boundary.push(touches_boundary(&cell, clip));
    }
    (areas, boundary)
}

/// Voronoi areas of the deformed marker field and their change from rest,
/// both clipped to the same polygon.
pub fn voronoi_areas(rest: &[Vec2], deformed: &[Vec2], clip: &[Vec2]) -> Result<VoronoiField, GeomError> {
    if rest.len() != deformed.len() {
        return Err(GeomError::Degenerate(format!(
            "rest has {} markers, deformed has {}",
            rest.len(),
            deformed.len()
        )));
    }
    validate_sites(rest)?;
    validate_sites(deformed)?;
    let (rest_areas, _) = areas_for(rest, clip);
    let (cell_areas, boundary_mask) = areas_for(deformed, clip);
    let delta_areas = cell_areas.iter().zip(&rest_areas).map(|(&a, &r)| a - r).collect();
    Ok(VoronoiField { centroids: deformed.to_vec(), cell_areas, rest_areas, delta_areas, boundary_mask })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: a cell's vertices are intersection points of the
    /// constraint lines (bisectors and clip edges) that satisfy every
    /// constraint; sort them around the site and apply the shoelace formula.
    /// Entirely different construction from the sequential clipping above.
    fn oracle_cell_area(sites: &[Vec2], idx: usize, clip: &[Vec2]) -> f64 {
        // Constraints as (point on line, inward normal): keep (p - a) . n <= 0.
        let mut lines: Vec<(Vec2, Vec2)> = Vec::new();
        let me = sites[idx];
        for (j, &o) in sites.iter().enumerate() {
            if j != idx {
                lines.push((Vec2::new(0.5 * (me.x + o.x), 0.5 * (me.y + o.y)), o - me));
            }
        }
        for i in 0..clip.len() {
            let a = clip[i];
            let b = clip[(i + 1) % clip.len()];
            let edge = b - a;
            // Clip polygon is counterclockwise; outward normal points right
            // of the edge direction.
            lines.push((a, Vec2::new(edge.y, -edge.x)));
        }
        let satisfied = |p: Vec2| lines.iter().all(|&(a, n)| (p - a).dot(n) <= 1e-9);
        let mut verts: Vec<Vec2> = Vec::new();
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (a1, n1) = lines[i];
                let (a2, n2) = lines[j];
                let det = n1.x * n2.y - n1.y * n2.x;
                if det.abs() < 1e-12 {
                    continue;
                }
                let c1 = n1.dot(a1);
                let c2 = n2.dot(a2);
                let p = Vec2::new((c1 * n2.y - c2 * n1.y) / det, (n1.x * c2 - n2.x * c1) / det);
                if satisfied(p) && !verts.iter().any(|v| v.dist(p) < 1e-9) {
                    verts.push(p);
                }
            }
        }
        let cx = verts.iter().map(|v| v.x).sum::<f64>() / verts.len() as f64;
        let cy = verts.iter().map(|v| v.y).sum::<f64>() / verts.len() as f64;
        verts.sort_by(|a, b| {
            let aa = (a.y - cy).atan2(a.x - cx);
            let bb = (b.y - cy).atan2(b.x - cx);
            aa.partial_cmp(&bb).unwrap()
        });
        polygon_area(&verts).abs()
    }

    fn unit_square() -> Vec<Vec2> {
        vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)]
    }

    fn quarter_markers() -> Vec<Vec2> {
        vec![Vec2::new(0.25, 0.25), Vec2::new(0.75, 0.25), Vec2::new(0.25, 0.75), Vec2::new(0.75, 0.75)]
    }

    #[test]
    fn unit_square_quarters() {
        let clip = unit_square();
        let m = quarter_markers();
        let field = voronoi_areas(&m, &m, &clip).unwrap();
        for (i, &a) in field.cell_areas.iter().enumerate() {
            let oracle = oracle_cell_area(&m, i, &clip);
            assert!((a - 0.25).abs() < 1e-9, "cell {i} area {a}");
            assert!((a - oracle).abs() < 1e-9, "cell {i}: {a} vs oracle {oracle}");
        }
    }

    #[test]
    fn matches_oracle_on_marker_grid() {
        let cfg = crate::sim::SensorConfig::default();
        let rest = crate::sim::MarkerField::rest_grid(&cfg).rest_positions;
        let clip = aperture_polygon(cfg.aperture_radius_mm);
        let field = voronoi_areas(&rest, &rest, &clip).unwrap();
        for i in (0..rest.len()).step_by(17) {
            let oracle = oracle_cell_area(&rest, i, &clip);
            assert!(
                (field.cell_areas[i] - oracle).abs() < 1e-9,
                "cell {i}: {} vs oracle {oracle}",
                field.cell_areas[i]
            );
        }
    }

    #[test]
    fn areas_partition_the_aperture() {
        let cfg = crate::sim::SensorConfig::default();
        let rest = crate::sim::MarkerField::rest_grid(&cfg).rest_positions;
        let clip = aperture_polygon(cfg.aperture_radius_mm);
        let field = voronoi_areas(&rest, &rest, &clip).unwrap();
        let total: f64 = field.cell_areas.iter().sum();
        let clip_area = polygon_area(&clip).abs();
        assert!((total - clip_area).abs() / clip_area < 1e-6, "{total} vs {clip_area}");
    }

    #[test]
    fn rest_equals_deformed_means_zero_delta() {
        let clip = unit_square();
        let m = quarter_markers();
        let field = voronoi_areas(&m, &m, &clip).unwrap();
        assert!(field.delta_areas.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn area_conserved_under_deformation() {
        let cfg = crate::sim::SensorConfig::default();
        let rest = crate::sim::MarkerField::rest_grid(&cfg).rest_positions;
        let mut deformed = rest.clone();
        for (i, p) in deformed.iter_mut().enumerate() {
            p.x += 0.2 * ((i as f64) * 0.7).sin();
            p.y += 0.2 * ((i as f64) * 1.3).cos();
        }
        let clip = aperture_polygon(cfg.aperture_radius_mm);
        let field = voronoi_areas(&rest, &deformed, &clip).unwrap();
        let total: f64 = field.cell_areas.iter().sum();
        let rest_total: f64 = field.rest_areas.iter().sum();
        assert!((total - rest_total).abs() / rest_total < 1e-6);
        assert!(field.delta_areas.iter().any(|&d| d.abs() > 1e-6));
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let clip = unit_square();
        let mut dup = quarter_markers();
        dup[3] = dup[0];
        assert!(matches!(voronoi_areas(&dup, &dup, &clip), Err(GeomError::DuplicateMarkers { .. })));
        let line: Vec<Vec2> = (0..5).map(|i| Vec2::new(0.1 + 0.2 * i as f64, 0.5)).collect();
        assert!(matches!(voronoi_areas(&line, &line, &clip), Err(GeomError::Degenerate(_))));
        let three = &quarter_markers()[..3];
        assert!(voronoi_areas(three, three, &clip).is_err());
    }

    #[test]
    fn boundary_mask_marks_outer_cells() {
        let cfg = crate::sim::SensorConfig::default();
        let rest = crate::sim::MarkerField::rest_grid(&cfg).rest_positions;
        let clip = aperture_polygon(cfg.aperture_radius_mm);
        let field = voronoi_areas(&rest, &rest, &clip).unwrap();
        // The center marker's cell is enclosed by its ring neighbours.
        assert!(!field.boundary_mask[0]);
        assert!(field.boundary_mask.iter().any(|&b| b));
    }
}
