//! Marker recovery from binary tactile images: connected-component blobs,
//! centroid localization, and matching back to the rest grid.

use crate::geom::Vec2;
use crate::geometry::GeomError;
use crate::sim::{px_to_mm, rasterize, BinaryImage, MarkerField, SensorConfig};

/// Blob centroids matched against rest markers. Indices refer to the rest
/// grid; unmatched rest markers were clipped, merged, or lost.
#[derive(Debug, Clone)]
pub struct MatchedMarkers {
    pub rest_indices: Vec<usize>,
    pub rest: Vec<Vec2>,
    pub deformed: Vec<Vec2>,
    pub merged_blobs: usize,
    pub unmatched_rest: usize,
}

/// Connected components of a pixel set under 4-connectivity, as lists of
/// flat pixel indices.
fn components(pixels: &[usize], w: usize) -> Vec<Vec<usize>> {
    let set: std::collections::HashSet<usize> = pixels.iter().copied().collect();
    let mut seen: std::collections::HashSet<usize> = std::collections::HashSet::new();
    let mut out = Vec::new();
    for &start in pixels {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(p) = stack.pop() {
            comp.push(p);
            let c = p % w;
            let mut visit = |q: usize| {
                if set.contains(&q) && seen.insert(q) {
                    stack.push(q);
                }
            };
            visit(p + w);
            if p >= w {
                visit(p - w);
            }
            if c > 0 {
                visit(p - 1);
            }
            if c + 1 < w {
                visit(p + 1);
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort_by_key(|c| c[0]);
    out
}

/// Erode a pixel set with the 4-neighbour cross; pixels on the image border
/// are treated as having empty neighbours.
fn erode_set(pixels: &[usize], w: usize) -> Vec<usize> {
    let set: std::collections::HashSet<usize> = pixels.iter().copied().collect();
    pixels
        .iter()
        .copied()
        .filter(|&p| {
            let c = p % w;
            p >= w
                && c > 0
                && c + 1 < w
                && set.contains(&(p - w))
                && set.contains(&(p + w))
                && set.contains(&(p - 1))
                && set.contains(&(p + 1))
        })
        .collect()
}

fn centroid(pixels: &[usize], w: usize) -> (f64, f64) {
    let n = pixels.len() as f64;
    let sum_r: f64 = pixels.iter().map(|&p| (p / w) as f64).sum();
    let sum_c: f64 = pixels.iter().map(|&p| (p % w) as f64).sum();
    (sum_r / n, sum_c / n)
}

/// Pixel counts of a single marker disc rendered at the image center, at
/// erosion levels 0, 1 and 2. These are the reference blob sizes when
/// deciding whether a component holds one marker or several.
fn nominal_blob_pixels(cfg: &SensorConfig) -> [usize; 3] {
    let field = MarkerField {
        rest_positions: vec![Vec2::ZERO],
        deformed_positions: vec![Vec2::ZERO],
        ring_counts: vec![1],
        pin_radius_px: cfg.pin_radius_px,
    };
    let (img, _) = rasterize(&field, cfg).expect("single centered marker always rasterizes");
    let w = img.width;
    let lit: Vec<usize> = (0..img.pixels.len()).filter(|&i| img.pixels[i] > 0).collect();
    let e1 = erode_set(&lit, w);
    let e2 = erode_set(&e1, w);
    [lit.len(), e1.len().max(1), e2.len().max(1)]
}

/// Extract blob centroids from a binarized frame and match them to the rest
/// grid by greedy nearest-pair assignment.
///
/// Blobs much larger than a single disc are treated as merged markers and
/// dropped rather than guessed at.
pub fn extract_markers(img: &BinaryImage, cfg: &SensorConfig) -> Result<MatchedMarkers, GeomError> {
    let rest = MarkerField::rest_grid(cfg).rest_positions;
    let nominal = nominal_blob_pixels(cfg);
    let w = img.width;
    let lit: Vec<usize> = (0..img.pixels.len()).filter(|&i| img.pixels[i] > 0).collect();
    let mut blobs: Vec<Vec2> = Vec::new();
    let mut merged = 0usize;
    // Components near the size of one disc yield a centroid directly.
    // Oversized components hold several touching discs: erosion strips the
    // narrow bridges between them, surviving pieces seed one marker each,
    // and the raw pixels are then reassigned to the nearest seed so the
    // final centroids keep full-disc accuracy. Pieces still oversized after
    // two erosions are irrecoverably merged and dropped.
    for comp in components(&lit, w) {
        let n = comp.len() as f64;
        if n < 0.3 * nominal[0] as f64 {
            // Border-clipped sliver, not a marker.
            continue;
        }
        if n <= 1.35 * nominal[0] as f64 {
            let (row, col) = centroid(&comp, w);
            blobs.push(px_to_mm(col, row, cfg));
            continue;
        }
        let mut seeds: Vec<(f64, f64)> = Vec::new();
        let mut work: Vec<(Vec<usize>, usize)> = vec![(comp.clone(), 0)];
        while let Some((piece, level)) = work.pop() {
            let n = piece.len() as f64;
            let nom = nominal[level] as f64;
            if n < 0.3 * nom {
                continue;
            }
            if level > 0 && n <= 1.35 * nom {
                seeds.push(centroid(&piece, w));
            } else if level + 1 < nominal.len() {
                let eroded = erode_set(&piece, w);
                if eroded.is_empty() {
                    merged += 1;
                } else {
                    for sub in components(&eroded, w) {
                        work.push((sub, level + 1));
                    }
                }
            } else {
                merged += 1;
            }
        }
        // Refine seed centroids against the raw pixels. Pixels farther than
        // a disc radius from every seed belong to a dropped marker and stay
        // unclaimed.
        let claim = cfg.pin_radius_px + 0.6;
        for _ in 0..2 {
            let mut acc = vec![(0.0f64, 0.0f64, 0usize); seeds.len()];
            for &p in &comp {
                let (r, c) = ((p / w) as f64, (p % w) as f64);
                let mut best = usize::MAX;
                let mut best_d = claim;
                for (k, &(sr, sc)) in seeds.iter().enumerate() {
                    let d = ((r - sr).powi(2) + (c - sc).powi(2)).sqrt();
                    if d < best_d {
                        best_d = d;
                        best = k;
                    }
                }
                if best != usize::MAX {
                    acc[best].0 += r;
                    acc[best].1 += c;
                    acc[best].2 += 1;
                }
            }
            for (k, &(sr, sc, cnt)) in acc.iter().enumerate() {
                if cnt > 0 {
                    seeds[k] = (sr / cnt as f64, sc / cnt as f64);
                }
            }
        }
        for (row, col) in seeds {
            blobs.push(px_to_mm(col, row, cfg));
        }
    }
    if blobs.is_empty() {
        return Err(GeomError::NoMarkers);
    }
    // Greedy matching: repeatedly take the globally closest unused pair.
    // A cap of twice the shear range rejects hallucinated matches when a
    // marker vanished and an unrelated blob is the nearest leftover.
    let max_dist = 2.0 * cfg.shear_max_mm;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (bi, &b) in blobs.iter().enumerate() {
        for (ri, &r) in rest.iter().enumerate() {
            let d = b.dist(r);
            if d <= max_dist {
                pairs.push((d, bi, ri));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut blob_used = vec![false; blobs.len()];
    let mut rest_used = vec![false; rest.len()];
    let mut matched: Vec<(usize, Vec2)> = Vec::new();
    for (_, bi, ri) in pairs {
        if !blob_used[bi] && !rest_used[ri] {
            blob_used[bi] = true;
            rest_used[ri] = true;
            matched.push((ri, blobs[bi]));
        }
    }
    matched.sort_by_key(|&(ri, _)| ri);
    let unmatched_rest = rest.len() - matched.len();
    Ok(MatchedMarkers {
        rest_indices: matched.iter().map(|&(ri, _)| ri).collect(),
        rest: matched.iter().map(|&(ri, _)| rest[ri]).collect(),
        deformed: matched.iter().map(|&(_, p)| p).collect(),
        merged_blobs: merged,
        unmatched_rest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_grid_round_trips_through_extraction() {
        let cfg = SensorConfig::default();
        let field = MarkerField::rest_grid(&cfg);
        let (img, _) = rasterize(&field, &cfg).unwrap();
        let m = extract_markers(&img, &cfg).unwrap();
        // A few grid-aligned disc pairs fuse on the raster and are dropped
        // rather than mislocated; everything else must come back clean.
        assert!(
            m.rest.len() >= cfg.marker_count() - 8,
            "only {} matched (merged {}, unmatched {})",
            m.rest.len(),
            m.merged_blobs,
            m.unmatched_rest
        );
        let px = 1.0 / cfg.px_per_mm();
        for (r, d) in m.rest.iter().zip(&m.deformed) {
            assert!(r.dist(*d) < 1.5 * px, "rest {r:?} recovered at {d:?}");
        }
    }

    #[test]
    fn uniform_shift_is_recovered() {
        let cfg = SensorConfig::default();
        let mut field = MarkerField::rest_grid(&cfg);
        let shift = Vec2::new(0.4, -0.3);
        for p in &mut field.deformed_positions {
            *p = *p + shift;
        }
        let (img, _) = rasterize(&field, &cfg).unwrap();
        let m = extract_markers(&img, &cfg).unwrap();
        assert!(m.rest.len() >= cfg.marker_count() - 12, "only {} matched", m.rest.len());
        let px = 1.0 / cfg.px_per_mm();
        let mut mean = Vec2::ZERO;
        for (r, d) in m.rest.iter().zip(&m.deformed) {
            let delta = *d - *r;
            assert!((delta - shift).norm() < 2.0 * px, "delta {delta:?}");
            mean = mean + delta;
        }
        mean = Vec2::new(mean.x / m.rest.len() as f64, mean.y / m.rest.len() as f64);
        assert!((mean - shift).norm() < px);
    }

    #[test]
    fn merged_markers_are_dropped_not_mislocated() {
        let cfg = SensorConfig::default();
        // An axis-aligned chain at one pitch renders as a solid bar the
        // splitter cannot fully resolve, plus one isolated disc far away.
        let chain: Vec<Vec2> = (0..5)
            .map(|i| Vec2::new(1.35 * i as f64, 0.0))
            .chain(std::iter::once(Vec2::new(-6.0, 0.0)))
            .collect();
        let field = MarkerField {
            rest_positions: chain.clone(),
            deformed_positions: chain,
            ring_counts: vec![6],
            pin_radius_px: 2.0,
        };
        let (img, _) = rasterize(&field, &cfg).unwrap();
        let m = extract_markers(&img, &cfg).unwrap();
        assert!(m.merged_blobs >= 1, "expected a merged drop, got {} blobs", m.deformed.len());
        // Recovered blobs must sit at true marker positions, never between
        // two merged ones.
        let px = 1.0 / cfg.px_per_mm();
        for d in &m.deformed {
            let nearest = field
                .rest_positions
                .iter()
                .map(|r| r.dist(*d))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1.5 * px, "blob at {d:?} is {nearest} mm from any true marker");
        }
    }

    #[test]
    fn blank_image_is_an_error() {
        let cfg = SensorConfig::default();
        let img = BinaryImage::zeros(cfg.raster_size, cfg.raster_size);
        assert!(matches!(extract_markers(&img, &cfg), Err(GeomError::NoMarkers)));
    }
}
