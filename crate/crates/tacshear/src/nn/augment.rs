//! Training-time augmentation: random integer image shifts of 1-2% of the
//! image size, zero-filled borders.

use crate::rng::Stream;
use crate::scalar::Scalar;

/// Shift magnitudes allowed by the 1-2% band for a square image of side `n`.
pub fn shift_band(n: usize) -> (i64, i64) {
    let lo = (0.01 * n as f64).ceil() as i64;
    let hi = (0.02 * n as f64).floor() as i64;
    (lo.max(1), hi.max(lo.max(1)))
}

/// Draw a shift (dy, dx); each axis gets a magnitude from the band and a
/// random sign.
pub fn sample_shift(n: usize, stream: &mut Stream) -> (i64, i64) {
    let (lo, hi) = shift_band(n);
    let axis = |st: &mut Stream| {
        let mag = lo + st.below((hi - lo + 1) as usize) as i64;
        if st.uniform() < 0.5 {
            -mag
        } else {
            mag
        }
    };
    (axis(stream), axis(stream))
}

/// Translate an HxW image by (dy, dx) pixels, zero-filling exposed borders.
pub fn shift_image<S: Scalar>(img: &[S], h: usize, w: usize, dy: i64, dx: i64) -> Vec<S> {
    let mut out = vec![S::zero(); h * w];
    for row in 0..h as i64 {
        let src_row = row - dy;
        if src_row < 0 || src_row >= h as i64 {
            continue;
        }
        for col in 0..w as i64 {
            let src_col = col - dx;
            if src_col < 0 || src_col >= w as i64 {
                continue;
            }
            out[row as usize * w + col as usize] = img[src_row as usize * w + src_col as usize];
        }
    }
    out
}

/// Random shift of a binary image drawn from the 1-2% band.
pub fn augment_shift<S: Scalar>(img: &[S], h: usize, w: usize, stream: &mut Stream) -> Vec<S> {
    let (dy, dx) = sample_shift(h.max(w), stream);
    shift_image(img, h, w, dy, dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_at_64_is_exactly_one() {
        // ceil(0.64) = 1, floor(1.28) = 1.
        assert_eq!(shift_band(64), (1, 1));
    }

    #[test]
    fn band_at_256_is_three_to_five() {
        assert_eq!(shift_band(256), (3, 5));
    }

    #[test]
    fn nonuniform_image_always_changes() {
        let mut img = vec![0.0f32; 64 * 64];
        img[32 * 64 + 32] = 1.0;
        let mut st = Stream::new(5, "aug");
        for _ in 0..20 {
            let out = augment_shift(&img, 64, 64, &mut st);
            assert_ne!(out, img);
        }
    }

    #[test]
    fn zeros_stay_zeros() {
        let img = vec![0.0f32; 64 * 64];
        let mut st = Stream::new(5, "aug");
        let out = augment_shift(&img, 64, 64, &mut st);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shift_moves_pixel_exactly() {
        let mut img = vec![0.0f64; 16];
        img[1 * 4 + 1] = 1.0;
        let out = shift_image(&img, 4, 4, 1, -1);
        assert_eq!(out[2 * 4 + 0], 1.0);
        assert_eq!(out.iter().filter(|&&v| v != 0.0).count(), 1);
    }
}
