//! Marker (pin) grid on the sensor membrane.

use crate::geom::Vec2;
use crate::sim::config::SensorConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct MarkerField {
    pub rest_positions: Vec<Vec2>,
    pub deformed_positions: Vec<Vec2>,
    pub ring_counts: Vec<usize>,
    pub pin_radius_px: f64,
}

impl MarkerField {
    /// Rest grid: concentric rings, evenly spaced around each ring.
    pub fn rest_grid(cfg: &SensorConfig) -> Self {
        let mut pts = Vec::with_capacity(cfg.marker_count());
        for (ring, &count) in cfg.ring_counts.iter().enumerate() {
            let r = ring as f64 * cfg.ring_spacing_mm;
            if ring == 0 {
                pts.push(Vec2::ZERO);
                continue;
            }
            for k in 0..count {
                let phi = std::f64::consts::TAU * k as f64 / count as f64;
                pts.push(Vec2::new(r * phi.cos(), r * phi.sin()));
            }
        }
        MarkerField {
            deformed_positions: pts.clone(),
            rest_positions: pts,
            ring_counts: cfg.ring_counts.clone(),
            pin_radius_px: cfg.pin_radius_px,
        }
    }

    pub fn len(&self) -> usize {
        self.rest_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rest_positions.is_empty()
    }

    /// Mean distance of deformed markers from their rest positions (mm).
    pub fn mean_displacement(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let total: f64 =
            self.rest_positions.iter().zip(&self.deformed_positions).map(|(r, d)| r.dist(*d)).sum();
        total / self.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_127_markers() {
        let cfg = SensorConfig::default();
        let f = MarkerField::rest_grid(&cfg);
        assert_eq!(f.len(), 127);
    }

    #[test]
    fn rest_positions_distinct_and_in_aperture() {
        let cfg = SensorConfig::default();
        let f = MarkerField::rest_grid(&cfg);
        for (i, p) in f.rest_positions.iter().enumerate() {
            assert!(p.norm() < cfg.aperture_radius_mm);
            for q in &f.rest_positions[i + 1..] {
                assert!(p.dist(*q) > 1e-6);
            }
        }
    }
}
