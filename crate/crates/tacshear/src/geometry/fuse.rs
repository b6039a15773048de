//! Fusing local surface patches into one object-frame height map.

use crate::geom::Vec2;
use crate::geometry::surface::{GridSpec, LocalSurface};
use crate::geometry::GeomError;

/// Object-frame reconstruction on a world grid. `support` marks bins that
/// received at least one observation; holes inside the convex hull of the
/// supported bins are filled by neighbour averaging but stay unsupported.
#[derive(Debug, Clone)]
pub struct ObjectReconstruction {
    pub grid: GridSpec,
    pub heights: Vec<f64>,
    pub support: Vec<bool>,
}

/// Average all patches into the world grid, then fill interior holes.
pub fn fuse_object(surfaces: &[LocalSurface], grid: &GridSpec) -> Result<ObjectReconstruction, GeomError> {
    if surfaces.is_empty() {
        return Err(GeomError::Degenerate("no surfaces to fuse".into()));
    }
    let n = grid.n;
    let mut sum = vec![0.0f64; n * n];
    let mut count = vec![0u32; n * n];
    for s in surfaces {
        for row in 0..s.grid.n {
            for col in 0..s.grid.n {
                let w = s.pose_tag.apply(s.grid.point(row, col));
                if let Some((r, c)) = grid.bin(w) {
                    sum[r * n + c] += s.heights[row * s.grid.n + col];
                    count[r * n + c] += 1;
                }
            }
        }
    }
    let support: Vec<bool> = count.iter().map(|&c| c > 0).collect();
    if !support.iter().any(|&s| s) {
        return Err(GeomError::Degenerate("no sample landed on the world grid".into()));
    }
    let mut heights: Vec<f64> =
        sum.iter().zip(&count).map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();

    // Hull-restricted fill: grow inward from the supported set, each new
    // cell taking the average of its already-valued 4-neighbours.
    let hull = convex_hull(
        &(0..n * n)
            .filter(|&i| support[i])
            .map(|i| grid.point(i / n, i % n))
            .collect::<Vec<_>>(),
    );
    let mut valued = support.clone();
    loop {
        let mut changed = false;
        let snapshot = heights.clone();
        let was = valued.clone();
        for r in 0..n {
            for c in 0..n {
                let i = r * n + c;
                if was[i] || !point_in_hull(grid.point(r, c), &hull) {
                    continue;
                }
                let mut acc = 0.0;
                let mut k = 0u32;
                if r > 0 && was[i - n] {
                    acc += snapshot[i - n];
                    k += 1;
                }
                if r + 1 < n && was[i + n] {
                    acc += snapshot[i + n];
                    k += 1;
                }
                if c > 0 && was[i - 1] {
                    acc += snapshot[i - 1];
                    k += 1;
                }
                if c + 1 < n && was[i + 1] {
                    acc += snapshot[i + 1];
                    k += 1;
                }
                if k > 0 {
                    heights[i] = acc / k as f64;
                    valued[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(ObjectReconstruction { grid: *grid, heights, support })
}

/// Andrew monotone chain; returns hull vertices counterclockwise.
fn convex_hull(pts: &[Vec2]) -> Vec<Vec2> {
    let mut p = pts.to_vec();
    p.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    p.dedup_by(|a, b| a.dist(*b) < 1e-12);
    if p.len() < 3 {
        return p;
    }
    let build = |iter: &mut dyn Iterator<Item = Vec2>| {
        let mut out: Vec<Vec2> = Vec::new();
        for q in iter {
            while out.len() >= 2 {
                let a = out[out.len() - 2];
                let b = out[out.len() - 1];
                if (b - a).cross(q - a) <= 0.0 {
                    out.pop();
                } else {
                    break;
                }
            }
            out.push(q);
        }
        out
    };
    let mut lower = build(&mut p.iter().copied());
    let mut upper = build(&mut p.iter().rev().copied());
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    lower
}

fn point_in_hull(p: Vec2, hull: &[Vec2]) -> bool {
    if hull.len() < 3 {
        return false;
    }
    let eps = 1e-9;
    (0..hull.len()).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        (b - a).cross(p - a) >= -eps
    })
}
