//! Binary rasterization of marker fields.

use crate::geom::Vec2;
use crate::sim::config::SensorConfig;
use crate::sim::marker::MarkerField;
use crate::sim::SimError;

/// Binary image, row-major, values in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn zeros(height: usize, width: usize) -> Self {
        BinaryImage { height, width, pixels: vec![0; height * width] }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: u8) {
        self.pixels[row * self.width + col] = v;
    }

    /// Pixels as scalars in {0.0, 1.0}.
    pub fn to_f32(&self) -> Vec<f32> {
        self.pixels.iter().map(|&p| p as f32).collect()
    }

    /// PGM P5, maxval 255, with 1 scaled to 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|&p| if p > 0 { 255u8 } else { 0 }));
        out
    }
}

/// Render each marker as a filled disc at its deformed position.
///
/// Markers whose center falls outside the aperture are clipped and counted;
/// exceeding the configured fraction is an error.
pub fn rasterize(field: &MarkerField, cfg: &SensorConfig) -> Result<(BinaryImage, usize), SimError> {
    if field.pin_radius_px < 1.0 {
        return Err(SimError::BadConfig("pin_radius_px must be >= 1"));
    }
    let size = cfg.raster_size;
    let ppm = cfg.px_per_mm();
    let half = size as f64 / 2.0;
    let mut img = BinaryImage::zeros(size, size);
    let mut clipped = 0usize;
    let r = field.pin_radius_px;
    for &m in &field.deformed_positions {
        if m.norm() > cfg.aperture_radius_mm {
            clipped += 1;
            continue;
        }
        let cx = half + m.x * ppm;
        let cy = half + m.y * ppm;
        let row_lo = ((cy - r).floor().max(0.0)) as usize;
        let row_hi = ((cy + r).ceil().min(size as f64 - 1.0)) as usize;
        let col_lo = ((cx - r).floor().max(0.0)) as usize;
        let col_hi = ((cx + r).ceil().min(size as f64 - 1.0)) as usize;
        for row in row_lo..=row_hi {
            for col in col_lo..=col_hi {
                let d2 = (row as f64 - cy).powi(2) + (col as f64 - cx).powi(2);
                if d2 <= r * r {
                    img.set(row, col, 1);
                }
            }
        }
    }
    let max_clipped = (cfg.max_clipped_fraction * field.len().max(1) as f64) as usize;
    if clipped > max_clipped {
        return Err(SimError::TooManyClipped { clipped, total: field.len() });
    }
    Ok((img, clipped))
}

/// Map a sensor-frame point (mm) to raster pixel coordinates (col, row).
pub fn mm_to_px(p: Vec2, cfg: &SensorConfig) -> (f64, f64) {
    let half = cfg.raster_size as f64 / 2.0;
    (half + p.x * cfg.px_per_mm(), half + p.y * cfg.px_per_mm())
}

/// Inverse of [`mm_to_px`].
pub fn px_to_mm(col: f64, row: f64, cfg: &SensorConfig) -> Vec2 {
    let half = cfg.raster_size as f64 / 2.0;
    Vec2::new((col - half) / cfg.px_per_mm(), (row - half) / cfg.px_per_mm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_field_renders_black() {
        let cfg = SensorConfig::default();
        let field = MarkerField {
            rest_positions: vec![],
            deformed_positions: vec![],
            ring_counts: vec![],
            pin_radius_px: 2.0,
        };
        let (img, clipped) = rasterize(&field, &cfg).unwrap();
        assert_eq!(clipped, 0);
        assert!(img.pixels.iter().all(|&p| p == 0));
    }

    #[test]
    fn center_marker_matches_brute_force_disc() {
        let cfg = SensorConfig::default();
        let field = MarkerField {
            rest_positions: vec![Vec2::ZERO],
            deformed_positions: vec![Vec2::ZERO],
            ring_counts: vec![1],
            pin_radius_px: 2.0,
        };
        let (img, _) = rasterize(&field, &cfg).unwrap();
        for row in 0..64 {
            for col in 0..64 {
                let d2 = (row as f64 - 32.0).powi(2) + (col as f64 - 32.0).powi(2);
                let want = if d2 <= 4.0 { 1 } else { 0 };
                assert_eq!(img.get(row, col), want, "pixel ({row},{col})");
            }
        }
    }

    #[test]
    fn rasterize_is_deterministic() {
        let cfg = SensorConfig::default();
        let field = MarkerField::rest_grid(&cfg);
        let (a, _) = rasterize(&field, &cfg).unwrap();
        let (b, _) = rasterize(&field, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_aperture_markers_are_counted() {
        let mut cfg = SensorConfig::default();
        cfg.max_clipped_fraction = 0.6;
        let field = MarkerField {
            rest_positions: vec![Vec2::ZERO, Vec2::new(15.0, 0.0)],
            deformed_positions: vec![Vec2::ZERO, Vec2::new(15.0, 0.0)],
            ring_counts: vec![2],
            pin_radius_px: 2.0,
        };
        let (_, clipped) = rasterize(&field, &cfg).unwrap();
        assert_eq!(clipped, 1);
    }

    #[test]
    fn too_many_clipped_is_error() {
        let cfg = SensorConfig::default();
        let far = Vec2::new(20.0, 0.0);
        let field = MarkerField {
            rest_positions: vec![far; 4],
            deformed_positions: vec![far; 4],
            ring_counts: vec![4],
            pin_radius_px: 2.0,
        };
        assert!(rasterize(&field, &cfg).is_err());
    }

    #[test]
    fn pgm_header_and_payload() {
        let mut img = BinaryImage::zeros(2, 3);
        img.set(1, 2, 1);
        let pgm = img.to_pgm();
        assert!(pgm.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&pgm[pgm.len() - 6..], &[0, 0, 0, 0, 0, 255]);
    }
}
