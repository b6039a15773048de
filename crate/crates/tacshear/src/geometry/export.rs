//! Plain-text exports for reconstructed surfaces: a point cloud CSV and a
//! grayscale PGM heat map with a sidecar describing the value scale.

use crate::geometry::surface::GridSpec;

/// CSV point cloud, one row per selected grid sample.
pub fn points_csv(grid: &GridSpec, heights: &[f64], mask: Option<&[bool]>) -> String {
    assert_eq!(heights.len(), grid.n * grid.n);
    let mut out = String::from("x_mm,y_mm,height\n");
    for row in 0..grid.n {
        for col in 0..grid.n {
            let i = row * grid.n + col;
            if mask.map_or(true, |m| m[i]) {
                let p = grid.point(row, col);
                out.push_str(&format!("{:.6},{:.6},{:.9}\n", p.x, p.y, heights[i]));
            }
        }
    }
    out
}

/// PGM P5 heat map plus a sidecar mapping gray levels back to heights.
/// Rows are written top to bottom in grid order.
pub fn heightmap_pgm(grid: &GridSpec, heights: &[f64]) -> (Vec<u8>, String) {
    assert_eq!(heights.len(), grid.n * grid.n);
    let lo = heights.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = heights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut pgm = format!("P5\n{} {}\n255\n", grid.n, grid.n).into_bytes();
    pgm.extend(heights.iter().map(|&h| (255.0 * (h - lo) / span).round() as u8));
    let sidecar = format!(
        "min_height={lo:.9}\nmax_height={hi:.9}\nhalf_extent_mm={:.6}\ngrid_n={}\n",
        grid.half_extent_mm, grid.n
    );
    (pgm, sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape_and_masking() {
        let grid = GridSpec::new(1.0, 3);
        let heights: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let full = points_csv(&grid, &heights, None);
        assert_eq!(full.lines().count(), 10);
        assert_eq!(full.lines().next().unwrap(), "x_mm,y_mm,height");
        assert!(full.lines().nth(1).unwrap().starts_with("-1.000000,-1.000000,0"));
        let mut mask = vec![false; 9];
        mask[4] = true;
        let one = points_csv(&grid, &heights, Some(&mask));
        assert_eq!(one.lines().count(), 2);
        assert_eq!(one.lines().nth(1).unwrap(), "0.000000,0.000000,4.000000000");
    }

    #[test]
    fn pgm_scales_to_full_range() {
        let grid = GridSpec::new(1.0, 2);
        let heights = vec![0.0, 0.5, 1.0, 0.25];
        let (pgm, sidecar) = heightmap_pgm(&grid, &heights);
        assert!(pgm.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&pgm[pgm.len() - 4..], &[0, 128, 255, 64]);
        assert!(sidecar.contains("min_height=0.000000000"));
        assert!(sidecar.contains("max_height=1.000000000"));
    }

    #[test]
    fn constant_field_does_not_divide_by_zero() {
        let grid = GridSpec::new(1.0, 2);
        let (pgm, _) = heightmap_pgm(&grid, &[2.0; 4]);
        assert_eq!(&pgm[pgm.len() - 4..], &[0, 0, 0, 0]);
    }
}
