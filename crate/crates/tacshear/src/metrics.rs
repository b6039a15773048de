//! Image similarity metrics used by the evaluation tables.

use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct SsimConfig {
    pub scales: usize,
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    /// One weight per scale; must sum to 1.
    pub weights: Vec<f64>,
}

impl Default for SsimConfig {
    fn default() -> Self {
        // First three of the usual five scale weights, renormalized. Five
        // scales would shrink a 64 px raster below the 11 px window.
        let raw = [0.0448, 0.2856, 0.3001];
        let sum: f64 = raw.iter().sum();
        SsimConfig {
            scales: 3,
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            weights: raw.iter().map(|w| w / sum).collect(),
        }
    }
}

impl SsimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.window % 2 == 0 {
            return Err(format!("window must be odd, got {}", self.window));
        }
        if self.weights.len() != self.scales {
            return Err(format!("{} weights for {} scales", self.weights.len(), self.scales));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("weights sum to {sum}, not 1"));
        }
        Ok(())
    }
}

pub fn mse<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let n = a.len() as f64;
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x.to_f64_lossy() - y.to_f64_lossy();
            d * d
        })
        .sum::<f64>()
        / n
}

pub fn mae<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let n = a.len() as f64;
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x.to_f64_lossy() - y.to_f64_lossy()).abs())
        .sum::<f64>()
        / n
}

fn gaussian_kernel(window: usize, sigma: f64) -> Vec<f64> {
    let half = (window / 2) as f64;
    let mut k: Vec<f64> = (0..window)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian filter, valid region only (no padding).
fn blur_valid(img: &[f64], h: usize, w: usize, kernel: &[f64]) -> (Vec<f64>, usize, usize) {
    let k = kernel.len();
    let wh = h;
    let ww = w - k + 1;
    let mut rows = vec![0.0; wh * ww];
    for r in 0..h {
        for c in 0..ww {
            let mut acc = 0.0;
            for (i, &kv) in kernel.iter().enumerate() {
                acc += kv * img[r * w + c + i];
            }
            rows[r * ww + c] = acc;
        }
    }
    let oh = h - k + 1;
    let mut out = vec![0.0; oh * ww];
    for r in 0..oh {
        for c in 0..ww {
            let mut acc = 0.0;
            for (i, &kv) in kernel.iter().enumerate() {
                acc += kv * rows[(r + i) * ww + c];
            }
            out[r * ww + c] = acc;
        }
    }
    (out, oh, ww)
}

/// Mean luminance and contrast-structure terms over the valid window region.
fn ssim_terms(a: &[f64], b: &[f64], h: usize, w: usize, cfg: &SsimConfig) -> (f64, f64) {
    let kernel = gaussian_kernel(cfg.window, cfg.sigma);
    let c1 = cfg.k1 * cfg.k1;
    let c2 = cfg.k2 * cfg.k2;
    let (mu_a, oh, ow) = blur_valid(a, h, w, &kernel);
    let (mu_b, _, _) = blur_valid(b, h, w, &kernel);
    let sq = |x: &[f64]| x.iter().map(|v| v * v).collect::<Vec<f64>>();
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let (e_aa, _, _) = blur_valid(&sq(a), h, w, &kernel);
    let (e_bb, _, _) = blur_valid(&sq(b), h, w, &kernel);
    let (e_ab, _, _) = blur_valid(&prod, h, w, &kernel);
    let mut lum = 0.0;
    let mut cs = 0.0;
    for i in 0..oh * ow {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        lum += (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        cs += (2.0 * cov + c2) / (va + vb + c2);
    }
    let n = (oh * ow) as f64;
    (lum / n, cs / n)
}

fn downsample2(img: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let oh = h / 2;
    let ow = w / 2;
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = 0.25
                * (img[2 * r * w + 2 * c]
                    + img[2 * r * w + 2 * c + 1]
                    + img[(2 * r + 1) * w + 2 * c]
                    + img[(2 * r + 1) * w + 2 * c + 1]);
        }
    }
    (out, oh, ow)
}

/// Multi-scale structural similarity between two [H, W] images in [0, 1].
/// Contrast-structure terms combine across scales; luminance enters only at
/// the coarsest one. Negative terms are clamped at zero so the geometric
/// combination stays defined.
pub fn ms_ssim<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>, cfg: &SsimConfig) -> f64 {
    assert_eq!(a.shape(), b.shape(), "image shapes differ");
    assert_eq!(a.shape().len(), 2, "expected [H, W] images");
    cfg.validate().expect("bad ssim config");
    let (mut h, mut w) = (a.shape()[0], a.shape()[1]);
    let min_side = h.min(w) >> (cfg.scales - 1);
    assert!(min_side >= cfg.window, "image side {min_side} below window {} at coarsest scale", cfg.window);
    let mut xa: Vec<f64> = a.data().iter().map(|v| v.to_f64_lossy()).collect();
    let mut xb: Vec<f64> = b.data().iter().map(|v| v.to_f64_lossy()).collect();
    let mut score = 1.0;
    for (level, &weight) in cfg.weights.iter().enumerate() {
        let (lum, cs) = ssim_terms(&xa, &xb, h, w, cfg);
        let term = if level + 1 == cfg.scales { (lum * cs).max(0.0) } else { cs.max(0.0) };
        score *= term.powf(weight);
        if level + 1 < cfg.scales {
            let (na, nh, nw) = downsample2(&xa, h, w);
            let (nb, _, _) = downsample2(&xb, h, w);
            xa = na;
            xb = nb;
            h = nh;
            w = nw;
        }
    }
    score
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    /// Plain nested-loop reference: full 2D window sums, no separable pass,
    /// recursion over scales. Shares nothing with the production path beyond
    /// the definition itself.
    fn reference_ms_ssim(a: &[f64], b: &[f64], h: usize, w: usize, cfg: &SsimConfig) -> f64 {
        fn level(a: &[f64], b: &[f64], h: usize, w: usize, cfg: &SsimConfig) -> (f64, f64) {
            let win = cfg.window;
            let mut kern = vec![vec![0.0; win]; win];
            let mut total = 0.0;
            for (r, row) in kern.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    let dr = r as f64 - (win / 2) as f64;
                    let dc = c as f64 - (win / 2) as f64;
                    *v = (-(dr * dr + dc * dc) / (2.0 * cfg.sigma * cfg.sigma)).exp();
                    total += *v;
                }
            }
            for row in &mut kern {
                for v in row {
                    *v /= total;
                }
            }
            let (c1, c2) = (cfg.k1 * cfg.k1, cfg.k2 * cfg.k2);
            let mut lum_sum = 0.0;
            let mut cs_sum = 0.0;
            let mut count = 0.0;
            for r0 in 0..=h - win {
                for c0 in 0..=w - win {
                    let mut ma = 0.0;
                    let mut mb = 0.0;
                    let mut aa = 0.0;
                    let mut bb = 0.0;
                    let mut ab = 0.0;
                    for r in 0..win {
                        for c in 0..win {
                            let x = a[(r0 + r) * w + c0 + c];
                            let y = b[(r0 + r) * w + c0 + c];
                            let k = kern[r][c];
                            ma += k * x;
                            mb += k * y;
                            aa += k * x * x;
                            bb += k * y * y;
                            ab += k * x * y;
                        }
                    }
                    let va = aa - ma * ma;
                    let vb = bb - mb * mb;
                    let cov = ab - ma * mb;
                    lum_sum += (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
                    cs_sum += (2.0 * cov + c2) / (va + vb + c2);
                    count += 1.0;
                }
            }
            (lum_sum / count, cs_sum / count)
        }
        fn shrink(x: &[f64], h: usize, w: usize) -> Vec<f64> {
            let mut out = Vec::new();
            for r in 0..h / 2 {
                for c in 0..w / 2 {
                    out.push((x[2 * r * w + 2 * c] + x[2 * r * w + 2 * c + 1] + x[(2 * r + 1) * w + 2 * c] + x[(2 * r + 1) * w + 2 * c + 1]) / 4.0);
                }
            }
            out
        }
        let mut xa = a.to_vec();
        let mut xb = b.to_vec();
        let (mut h, mut w) = (h, w);
        let mut score = 1.0;
        for (lvl, &wt) in cfg.weights.iter().enumerate() {
            let (lum, cs) = level(&xa, &xb, h, w, cfg);
            let t = if lvl + 1 == cfg.scales { (lum * cs).max(0.0) } else { cs.max(0.0) };
            score *= t.powf(wt);
            if lvl + 1 < cfg.scales {
                xa = shrink(&xa, h, w);
                xb = shrink(&xb, h, w);
                h /= 2;
                w /= 2;
            }
        }
        score
    }

    fn random_image(seed: u64, name: &str) -> Tensor<f64> {
        let mut rng = Stream::new(seed, name);
        Tensor::from_vec(&[64, 64], (0..64 * 64).map(|_| rng.uniform()).collect())
    }

    #[test]
    fn identical_images_score_one() {
        let x = random_image(5, "a");
        assert!((ms_ssim(&x, &x, &SsimConfig::default()) - 1.0).abs() < 1e-9);
        let zeros = Tensor::<f64>::zeros(&[64, 64]);
        assert!((ms_ssim(&zeros, &zeros, &SsimConfig::default()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric() {
        let a = random_image(5, "a");
        let b = random_image(5, "b");
        let cfg = SsimConfig::default();
        assert_eq!(ms_ssim(&a, &b, &cfg), ms_ssim(&b, &a, &cfg));
    }

    #[test]
    fn matches_reference_implementation() {
        let cfg = SsimConfig::default();
        let zeros = Tensor::<f64>::zeros(&[64, 64]);
        let ones = Tensor::<f64>::full(&[64, 64], 1.0);
        let want = reference_ms_ssim(zeros.data(), ones.data(), 64, 64, &cfg);
        let got = ms_ssim(&zeros, &ones, &cfg);
        assert!((got - want).abs() < 1e-4, "got {got}, reference {want}");

        let a = random_image(17, "ref.a");
        let b = random_image(17, "ref.b");
        let want = reference_ms_ssim(a.data(), b.data(), 64, 64, &cfg);
        let got = ms_ssim(&a, &b, &cfg);
        assert!((got - want).abs() < 1e-4, "got {got}, reference {want}");
    }

    #[test]
    fn bounded_and_ordered() {
        let a = random_image(3, "x");
        let mut close = a.clone();
        for v in close.data_mut() {
            *v = (*v + 0.01).min(1.0);
        }
        let far = random_image(4, "y");
        let cfg = SsimConfig::default();
        let s_close = ms_ssim(&a, &close, &cfg);
        let s_far = ms_ssim(&a, &far, &cfg);
        assert!((-1.0..=1.0).contains(&s_close));
        assert!((-1.0..=1.0).contains(&s_far));
        assert!(s_close > s_far);
    }

    #[test]
    fn mse_mae_basics() {
        let a = Tensor::from_vec(&[2, 2], vec![0.0f64, 1.0, 0.5, 0.25]);
        let b = Tensor::from_vec(&[2, 2], vec![0.0f64, 0.0, 1.0, 0.25]);
        assert!((mse(&a, &b) - (1.0 + 0.25) / 4.0).abs() < 1e-12);
        assert!((mae(&a, &b) - (1.0 + 0.5) / 4.0).abs() < 1e-12);
        assert_eq!(mse(&a, &a), 0.0);
    }

    #[test]
    fn rejects_even_window() {
        let cfg = SsimConfig { window: 10, ..SsimConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
