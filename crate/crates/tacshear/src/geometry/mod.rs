//! Contact geometry reconstruction: Voronoi cell areas over the marker
//! field, scattered-data surface fitting, patch fusion, and exports.

pub mod export;
pub mod fuse;
pub mod markers;
pub mod surface;
pub mod voronoi;

pub use export::{heightmap_pgm, points_csv};
pub use fuse::{fuse_object, ObjectReconstruction};
pub use markers::{extract_markers, MatchedMarkers};
pub use surface::{fit_local_surface, GridSpec, Interpolator, LocalSurface};
pub use crate::geom::Pose2;
pub use voronoi::{aperture_polygon, voronoi_areas, VoronoiField};

use crate::sim::{BinaryImage, SensorConfig};

#[derive(Debug)]
pub enum GeomError {
    /// Input is too degenerate to tessellate or triangulate.
    Degenerate(String),
    /// Two markers coincide (indices into the input slice).
    DuplicateMarkers { a: usize, b: usize },
    /// No usable blobs were found in the image.
    NoMarkers,
}

impl std::fmt::Display for GeomError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeomError::Degenerate(s) => write!(f, "degenerate geometry: {s}"),
            GeomError::DuplicateMarkers { a, b } => write!(f, "markers {a} and {b} coincide"),
            GeomError::NoMarkers => write!(f, "no marker blobs found"),
        }
    }
}

impl std::error::Error for GeomError {}

/// Full image-to-surface chain: blob extraction, Voronoi areas of the
/// matched markers against their rest positions, and a fitted height patch.
pub fn surface_from_image(
    img: &BinaryImage,
    cfg: &SensorConfig,
    grid: &GridSpec,
    pose_tag: Pose2,
) -> Result<LocalSurface, GeomError> {
    let m = extract_markers(img, cfg)?;
    let clip = aperture_polygon(cfg.aperture_radius_mm);
    let field = voronoi_areas(&m.rest, &m.deformed, &clip)?;
    fit_local_surface(&field, grid, pose_tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{sense_slide, sense_tap, ContactPose, ShapeKind, ShearPerturbation, StimulusShape};

    fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n).sqrt()
    }

    #[test]
    fn rest_image_reconstructs_flat() {
        let cfg = SensorConfig::default();
        let field = crate::sim::MarkerField::rest_grid(&cfg);
        let (img, _) = crate::sim::rasterize(&field, &cfg).unwrap();
        let grid = GridSpec::new(8.0, 33);
        let surf = surface_from_image(&img, &cfg, &grid, Pose2::IDENTITY).unwrap();
        // Centroid quantization leaves a little noise, but nothing that
        // looks like contact.
        let peak = surf.heights.iter().cloned().fold(0.0f64, |m, h| m.max(h.abs()));
        let pressed = tap_surface(&grid, 3.0);
        let pressed_peak = pressed.heights.iter().cloned().fold(0.0f64, |m, h| m.max(h.abs()));
        assert!(peak < 0.75 * pressed_peak, "rest peak {peak} vs pressed {pressed_peak}");
    }

    fn tap_surface(grid: &GridSpec, depth: f64) -> LocalSurface {
        let cfg = SensorConfig::default();
        let shape = StimulusShape::by_kind(ShapeKind::Disk);
        let pose = ContactPose::new(0.0, 0.0, depth, 0.0);
        let frame = sense_tap(&shape, &pose, 1, &cfg).unwrap();
        surface_from_image(&frame.raster, &cfg, grid, Pose2::IDENTITY).unwrap()
    }

    #[test]
    fn shear_corrupts_the_surface_more_than_no_shear() {
        let cfg = SensorConfig::default();
        let shape = StimulusShape::by_kind(ShapeKind::Disk);
        let pose = ContactPose::new(0.5, -0.5, 2.0, 0.0);
        let grid = GridSpec::new(8.0, 33);

        let canonical = sense_tap(&shape, &pose, 1, &cfg).unwrap();
        let canon_surf = surface_from_image(&canonical.raster, &cfg, &grid, Pose2::IDENTITY).unwrap();

        let shear = ShearPerturbation::new(2.0, 1.5);
        let sheared = sense_slide(&shape, &pose, &shear, 1, &cfg).unwrap();
        let sheared_surf = surface_from_image(&sheared.raster, &cfg, &grid, Pose2::IDENTITY).unwrap();

        let err = rms_diff(&sheared_surf.heights, &canon_surf.heights);
        let base = rms_diff(&canon_surf.heights, &canon_surf.heights);
        assert_eq!(base, 0.0);
        assert!(err > 0.0, "shear must perturb the reconstruction");
    }

    #[test]
    fn deeper_press_gives_taller_surface() {
        let grid = GridSpec::new(8.0, 33);
        let shallow = tap_surface(&grid, 1.0);
        let deep = tap_surface(&grid, 3.0);
        let vol = |s: &LocalSurface| s.heights.iter().map(|h| h.max(0.0)).sum::<f64>();
        assert!(vol(&deep) > vol(&shallow), "{} vs {}", vol(&deep), vol(&shallow));
    }
}
