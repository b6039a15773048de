//! Sensor and contact-model configuration.

#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig {
    /// Radius of the visible aperture disc (mm).
    pub aperture_radius_mm: f64,
    /// Square raster side in pixels.
    pub raster_size: usize,
    /// Rendered pin radius in pixels.
    pub pin_radius_px: f64,
    /// Markers per concentric ring, innermost first (ring 0 is the center).
    pub ring_counts: Vec<usize>,
    /// Radial spacing between rings (mm).
    pub ring_spacing_mm: f64,
    /// Radius of the sensing dome used by the spherical-cap profile (mm).
    pub dome_radius_mm: f64,
    /// Local deformation gain.
    pub alpha: f64,
    /// Decay radius of the contact weight outside the contact region (mm).
    pub rho_mm: f64,
    /// Width of the continuity ramp across the stimulus edge (mm).
    pub edge_width_mm: f64,
    /// Maximum allowed penetration depth (mm).
    pub depth_max_mm: f64,
    /// Maximum allowed shear offset per axis (mm).
    pub shear_max_mm: f64,
    /// Allowed lateral pose range, symmetric (mm).
    pub pose_range_mm: f64,
    /// Allowed yaw range, symmetric (deg).
    pub yaw_range_deg: f64,
    /// Rasterization fails if more than this fraction of markers clips out.
    pub max_clipped_fraction: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            aperture_radius_mm: 10.0,
            raster_size: 64,
            pin_radius_px: 2.0,
            ring_counts: vec![1, 6, 12, 18, 24, 30, 36],
            ring_spacing_mm: 1.35,
            dome_radius_mm: 20.0,
            alpha: 0.8,
            rho_mm: 3.0,
            edge_width_mm: 0.5,
            depth_max_mm: 3.5,
            shear_max_mm: 2.5,
            pose_range_mm: 5.0,
            yaw_range_deg: 45.0,
            max_clipped_fraction: 0.25,
        }
    }
}

impl SensorConfig {
    pub fn marker_count(&self) -> usize {
        self.ring_counts.iter().sum()
    }

    /// Nominal spacing between neighbouring markers (mm).
    pub fn marker_pitch_mm(&self) -> f64 {
        self.ring_spacing_mm
    }

    pub fn px_per_mm(&self) -> f64 {
        self.raster_size as f64 / (2.0 * self.aperture_radius_mm)
    }
}
