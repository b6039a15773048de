//! Dense/convolutional kernels with analytic gradients.
//!
//! Activations are NCHW row-major. Convolutions use "same" padding in the
//! TensorFlow sense: output size ceil(in/stride), total padding
//! max((out-1)*stride + k - in, 0), split with the smaller half in front.
//! Transposed convolution is the exact adjoint, mapping H -> H*stride.

use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;

fn same_pad(input: usize, out: usize, k: usize, stride: usize) -> usize {
    let needed = (out - 1) * stride + k;
    (needed.saturating_sub(input)) / 2
}

pub fn conv_out_size(input: usize, stride: usize) -> usize {
    input.div_ceil(stride)
}

/// Lowered patch matrix: col is [c*k*k, oh*ow] for one batch element, row
/// (ci, kh, kw) holding the input value each output position reads there.
fn im2col<S: Scalar>(
    xd: &[S],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    oh: usize,
    ow: usize,
    ph: usize,
    pw: usize,
    col: &mut [S],
) {
    for ci in 0..c {
        for kh in 0..k {
            for kw in 0..k {
                let row = ((ci * k + kh) * k + kw) * (oh * ow);
                for ohi in 0..oh {
                    let ih = (ohi * stride + kh) as isize - ph as isize;
                    let dst = &mut col[row + ohi * ow..row + (ohi + 1) * ow];
                    if ih < 0 || ih >= h as isize {
                        dst.fill(S::zero());
                        continue;
                    }
                    let src = ci * h * w + ih as usize * w;
                    for (owi, d) in dst.iter_mut().enumerate() {
                        let iw = (owi * stride + kw) as isize - pw as isize;
                        *d = if iw >= 0 && iw < w as isize { xd[src + iw as usize] } else { S::zero() };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-adds the patch matrix back onto the image.
fn col2im_add<S: Scalar>(
    col: &[S],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    oh: usize,
    ow: usize,
    ph: usize,
    pw: usize,
    xd: &mut [S],
) {
    for ci in 0..c {
        for kh in 0..k {
            for kw in 0..k {
                let row = ((ci * k + kh) * k + kw) * (oh * ow);
                for ohi in 0..oh {
                    let ih = (ohi * stride + kh) as isize - ph as isize;
                    if ih < 0 || ih >= h as isize {
                        continue;
                    }
                    let src = &col[row + ohi * ow..row + (ohi + 1) * ow];
                    let dst = ci * h * w + ih as usize * w;
                    for (owi, &v) in src.iter().enumerate() {
                        let iw = (owi * stride + kw) as isize - pw as isize;
                        if iw >= 0 && iw < w as isize {
                            xd[dst + iw as usize] += v;
                        }
                    }
                }
            }
        }
    }
}

/// out[m, n] += a[m, kk] * b[kk, n], rows contiguous so the inner loop stays
/// a straight fused sweep.
fn matmul_acc<S: Scalar>(a: &[S], b: &[S], out: &mut [S], m: usize, kk: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * kk..(i + 1) * kk];
        let orow = &mut out[i * n..(i + 1) * n];
        for (t, &av) in arow.iter().enumerate() {
            let brow = &b[t * n..(t + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
}

/// out[m, t] += a[m, n] * b[t, n]^T via unrolled row dot products.
fn matmul_abt_acc<S: Scalar>(a: &[S], b: &[S], out: &mut [S], m: usize, n: usize, t: usize) {
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        for ti in 0..t {
            let brow = &b[ti * n..(ti + 1) * n];
            let mut acc = [S::zero(); 4];
            let mut chunks_a = arow.chunks_exact(4);
            let mut chunks_b = brow.chunks_exact(4);
            for (ca, cb) in (&mut chunks_a).zip(&mut chunks_b) {
                for l in 0..4 {
                    acc[l] = acc[l] + ca[l] * cb[l];
                }
            }
            let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
            for (&av, &bv) in chunks_a.remainder().iter().zip(chunks_b.remainder()) {
                s = s + av * bv;
            }
            out[i * t + ti] += s;
        }
    }
}

/// x: [N,C,H,W], w: [OC,C,k,k], b: [OC] -> [N,OC,OH,OW]
pub fn conv2d_forward<S: Scalar>(x: &Tensor<S>, w: &Tensor<S>, b: &Tensor<S>, stride: usize) -> Tensor<S> {
    let (n, c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (oc, k) = (w.shape()[0], w.shape()[2]);
    assert_eq!(w.shape()[1], c, "conv channel mismatch");
    let (oh, ow) = (conv_out_size(h, stride), conv_out_size(wd, stride));
    let (ph, pw) = (same_pad(h, oh, k, stride), same_pad(wd, ow, k, stride));
    let (ckk, plane) = (c * k * k, oh * ow);
    let mut out = Tensor::zeros(&[n, oc, oh, ow]);
    let xd = x.data();
    let od = out.data_mut();
    let bd = b.data();
    let mut col = vec![S::zero(); ckk * plane];
    for ni in 0..n {
        im2col(&xd[ni * c * h * wd..(ni + 1) * c * h * wd], c, h, wd, k, stride, oh, ow, ph, pw, &mut col);
        let obase = ni * oc * plane;
        for oci in 0..oc {
            od[obase + oci * plane..obase + (oci + 1) * plane].fill(bd[oci]);
        }
        matmul_acc(w.data(), &col, &mut od[obase..obase + oc * plane], oc, ckk, plane);
    }
    out
}

/// Gradients of [`conv2d_forward`]: returns (dx, dw, db).
pub fn conv2d_backward<S: Scalar>(
    x: &Tensor<S>,
    w: &Tensor<S>,
    stride: usize,
    grad_out: &Tensor<S>,
) -> (Tensor<S>, Tensor<S>, Tensor<S>) {
    let (n, c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (oc, k) = (w.shape()[0], w.shape()[2]);
    let (oh, ow) = (grad_out.shape()[2], grad_out.shape()[3]);
    let (ph, pw) = (same_pad(h, oh, k, stride), same_pad(wd, ow, k, stride));
    let (ckk, plane) = (c * k * k, oh * ow);
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(w.shape());
    let mut db = Tensor::zeros(&[oc]);
    let xd = x.data();
    let god = grad_out.data();
    let dxd = dx.data_mut();
    let dbd = db.data_mut();
    let mut col = vec![S::zero(); ckk * plane];
    let mut colgrad = vec![S::zero(); ckk * plane];
    // w viewed as [OC, C*k*k]: dW += G · col^T, dx += col2im(w^T · G).
    let mut wt = vec![S::zero(); ckk * oc];
    for oci in 0..oc {
        for t in 0..ckk {
            wt[t * oc + oci] = w.data()[oci * ckk + t];
        }
    }
    for ni in 0..n {
        let g = &god[ni * oc * plane..(ni + 1) * oc * plane];
        for oci in 0..oc {
            for &gv in &g[oci * plane..(oci + 1) * plane] {
                dbd[oci] += gv;
            }
        }
        im2col(&xd[ni * c * h * wd..(ni + 1) * c * h * wd], c, h, wd, k, stride, oh, ow, ph, pw, &mut col);
        matmul_abt_acc(g, &col, dw.data_mut(), oc, plane, ckk);
        colgrad.fill(S::zero());
        matmul_acc(&wt, g, &mut colgrad, ckk, oc, plane);
        col2im_add(
            &colgrad,
            c,
            h,
            wd,
            k,
            stride,
            oh,
            ow,
            ph,
            pw,
            &mut dxd[ni * c * h * wd..(ni + 1) * c * h * wd],
        );
    }
    (dx, dw, db)
}

/// Transposed convolution ("adjoint" of a same-padded strided conv).
/// x: [N,C,H,W], w: [C,OC,k,k], b: [OC] -> [N,OC,H*stride,W*stride]
pub fn tconv2d_forward<S: Scalar>(x: &Tensor<S>, w: &Tensor<S>, b: &Tensor<S>, stride: usize) -> Tensor<S> {
    let (n, c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (oc, k) = (w.shape()[1], w.shape()[2]);
    assert_eq!(w.shape()[0], c, "tconv channel mismatch");
    let (oh, ow) = (h * stride, wd * stride);
    // Padding of the conv this is the adjoint of (maps oh -> h).
    let (ph, pw) = (same_pad(oh, h, k, stride), same_pad(ow, wd, k, stride));
    let (ockk, plane) = (oc * k * k, h * wd);
    let mut out = Tensor::zeros(&[n, oc, oh, ow]);
    let od = out.data_mut();
    let xd = x.data();
    let bd = b.data();
    // w viewed as [C, OC*k*k]; the scatter needs its transpose times x.
    let mut wt = vec![S::zero(); ockk * c];
    for ci in 0..c {
        for t in 0..ockk {
            wt[t * c + ci] = w.data()[ci * ockk + t];
        }
    }
    let mut colgrad = vec![S::zero(); ockk * plane];
    for ni in 0..n {
        let obase = ni * oc * oh * ow;
        for oci in 0..oc {
            od[obase + oci * oh * ow..obase + (oci + 1) * oh * ow].fill(bd[oci]);
        }
        colgrad.fill(S::zero());
        matmul_acc(&wt, &xd[ni * c * plane..(ni + 1) * c * plane], &mut colgrad, ockk, c, plane);
        col2im_add(&colgrad, oc, oh, ow, k, stride, h, wd, ph, pw, &mut od[obase..obase + oc * oh * ow]);
    }
    out
}

/// Gradients of [`tconv2d_forward`]: returns (dx, dw, db).
pub fn tconv2d_backward<S: Scalar>(
    x: &Tensor<S>,
    w: &Tensor<S>,
    stride: usize,
    grad_out: &Tensor<S>,
) -> (Tensor<S>, Tensor<S>, Tensor<S>) {
    let (n, c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (oc, k) = (w.shape()[1], w.shape()[2]);
    let (oh, ow) = (grad_out.shape()[2], grad_out.shape()[3]);
    let (ph, pw) = (same_pad(oh, h, k, stride), same_pad(ow, wd, k, stride));
    let (ockk, plane) = (oc * k * k, h * wd);
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(w.shape());
    let mut db = Tensor::zeros(&[oc]);
    let xd = x.data();
    let god = grad_out.data();
    let dxd = dx.data_mut();
    let dbd = db.data_mut();
    let mut col = vec![S::zero(); ockk * plane];
    for ni in 0..n {
        let g = &god[ni * oc * oh * ow..(ni + 1) * oc * oh * ow];
        for oci in 0..oc {
            for &gv in &g[oci * oh * ow..(oci + 1) * oh * ow] {
                dbd[oci] += gv;
            }
        }
        // Gathering the large gradient exactly as the adjoint conv would read
        // it turns both dx and dw into plain matrix products.
        im2col(g, oc, oh, ow, k, stride, h, wd, ph, pw, &mut col);
        matmul_acc(w.data(), &col, &mut dxd[ni * c * plane..(ni + 1) * c * plane], c, ockk, plane);
        matmul_abt_acc(&xd[ni * c * plane..(ni + 1) * c * plane], &col, dw.data_mut(), c, plane, ockk);
    }
    (dx, dw, db)
}

/// x: [N,F], w: [OF,F], b: [OF] -> [N,OF]
pub fn dense_forward<S: Scalar>(x: &Tensor<S>, w: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    let (n, f) = (x.shape()[0], x.shape()[1]);
    let of = w.shape()[0];
    assert_eq!(w.shape()[1], f, "dense feature mismatch");
    let mut out = Tensor::zeros(&[n, of]);
    let od = out.data_mut();
    let xd = x.data();
    let wdat = w.data();
    let bd = b.data();
    for ni in 0..n {
        for ofi in 0..of {
            let mut acc = bd[ofi];
            let wrow = ofi * f;
            let xrow = ni * f;
            for fi in 0..f {
                acc = acc + xd[xrow + fi] * wdat[wrow + fi];
            }
            od[ni * of + ofi] = acc;
        }
    }
    out
}

pub fn dense_backward<S: Scalar>(
    x: &Tensor<S>,
    w: &Tensor<S>,
    grad_out: &Tensor<S>,
) -> (Tensor<S>, Tensor<S>, Tensor<S>) {
    let (n, f) = (x.shape()[0], x.shape()[1]);
    let of = w.shape()[0];
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(w.shape());
    let mut db = Tensor::zeros(&[of]);
    let xd = x.data();
    let wdat = w.data();
    let god = grad_out.data();
    let dxd = dx.data_mut();
    let dwd = dw.data_mut();
    let dbd = db.data_mut();
    for ni in 0..n {
        for ofi in 0..of {
            let g = god[ni * of + ofi];
            dbd[ofi] += g;
            let wrow = ofi * f;
            let xrow = ni * f;
            for fi in 0..f {
                dwd[wrow + fi] += g * xd[xrow + fi];
                dxd[xrow + fi] += g * wdat[wrow + fi];
            }
        }
    }
    (dx, dw, db)
}

pub fn relu_forward<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(|v| if v > S::zero() { v } else { S::zero() })
}

pub fn relu_backward<S: Scalar>(x: &Tensor<S>, grad_out: &Tensor<S>) -> Tensor<S> {
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&xv, &g)| if xv > S::zero() { g } else { S::zero() })
        .collect();
    Tensor::from_vec(x.shape(), data)
}

pub fn sigmoid_forward<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(|v| S::one() / (S::one() + (-v).exp()))
}

/// Backward given the forward *output* y: dy * y * (1 - y).
pub fn sigmoid_backward<S: Scalar>(y: &Tensor<S>, grad_out: &Tensor<S>) -> Tensor<S> {
    let data = y
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&yv, &g)| g * yv * (S::one() - yv))
        .collect();
    Tensor::from_vec(y.shape(), data)
}

/// 2x2 stride-2 max pooling. Returns output and flat argmax indices into x.
pub fn maxpool_forward<S: Scalar>(x: &Tensor<S>) -> (Tensor<S>, Vec<usize>) {
    let (n, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    assert!(h % 2 == 0 && w % 2 == 0, "maxpool needs even spatial dims");
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[n, c, oh, ow]);
    let mut arg = vec![0usize; n * c * oh * ow];
    let xd = x.data();
    let od = out.data_mut();
    for ni in 0..n {
        for ci in 0..c {
            let base = ((ni * c + ci) * h) * w;
            for ohi in 0..oh {
                for owi in 0..ow {
                    let mut best_idx = base + (2 * ohi) * w + 2 * owi;
                    let mut best = xd[best_idx];
                    for (dh, dw) in [(0usize, 1usize), (1, 0), (1, 1)] {
                        let idx = base + (2 * ohi + dh) * w + 2 * owi + dw;
                        if xd[idx] > best {
                            best = xd[idx];
                            best_idx = idx;
                        }
                    }
                    let o = ((ni * c + ci) * oh + ohi) * ow + owi;
                    od[o] = best;
                    arg[o] = best_idx;
                }
            }
        }
    }
    (out, arg)
}

pub fn maxpool_backward<S: Scalar>(x_shape: &[usize], arg: &[usize], grad_out: &Tensor<S>) -> Tensor<S> {
    let mut dx = Tensor::zeros(x_shape);
    let dxd = dx.data_mut();
    for (o, &src) in arg.iter().enumerate() {
        dxd[src] += grad_out.data()[o];
    }
    dx
}

/// Per-channel batch statistics cached for the backward pass.
#[derive(Debug, Clone)]
pub struct BnCache<S: Scalar> {
    pub mean: Vec<S>,
    pub inv_std: Vec<S>,
    pub xhat: Tensor<S>,
}

/// Batchnorm over (N,H,W) per channel; 2D inputs [N,F] normalize per feature.
/// In train mode returns batch-stat output and cache; running stats are
/// updated by the caller via the returned batch mean/var.
pub fn batchnorm_forward<S: Scalar>(
    x: &Tensor<S>,
    gamma: &Tensor<S>,
    beta: &Tensor<S>,
    running_mean: &Tensor<S>,
    running_var: &Tensor<S>,
    train: bool,
) -> (Tensor<S>, Option<BnCache<S>>, Vec<S>, Vec<S>) {
    let (channels, spatial, n) = bn_dims(x);
    let m = S::from_f64_lossy((n * spatial) as f64);
    let eps = S::from_f64_lossy(BN_EPS);
    let mut mean = vec![S::zero(); channels];
    let mut var = vec![S::zero(); channels];
    if train {
        for c in 0..channels {
            let mut acc = S::zero();
            for_each_bn(x, c, |v| acc = acc + v);
            mean[c] = acc / m;
            let mu = mean[c];
            let mut vacc = S::zero();
            for_each_bn(x, c, |v| {
                let d = v - mu;
                vacc = vacc + d * d;
            });
            var[c] = vacc / m;
        }
    } else {
        mean.copy_from_slice(running_mean.data());
        var.copy_from_slice(running_var.data());
    }
    let inv_std: Vec<S> = var.iter().map(|&v| S::one() / (v + eps).sqrt()).collect();
    let mut xhat = Tensor::zeros(x.shape());
    let mut out = Tensor::zeros(x.shape());
    {
        let xd = x.data();
        let xh = xhat.data_mut();
        let od = out.data_mut();
        let gd = gamma.data();
        let bd = beta.data();
        for (i, &v) in xd.iter().enumerate() {
            let c = bn_channel_of(x.shape(), i);
            let h = (v - mean[c]) * inv_std[c];
            xh[i] = h;
            od[i] = gd[c] * h + bd[c];
        }
    }
    let cache = if train { Some(BnCache { mean: mean.clone(), inv_std, xhat }) } else { None };
    (out, cache, mean, var)
}

pub fn batchnorm_backward<S: Scalar>(
    cache: &BnCache<S>,
    gamma: &Tensor<S>,
    grad_out: &Tensor<S>,
) -> (Tensor<S>, Tensor<S>, Tensor<S>) {
    let x_shape = cache.xhat.shape().to_vec();
    let (channels, spatial, n) = bn_dims(&cache.xhat);
    let m = S::from_f64_lossy((n * spatial) as f64);
    let mut dgamma = vec![S::zero(); channels];
    let mut dbeta = vec![S::zero(); channels];
    let god = grad_out.data();
    let xh = cache.xhat.data();
    for (i, &g) in god.iter().enumerate() {
        let c = bn_channel_of(&x_shape, i);
        dgamma[c] = dgamma[c] + g * xh[i];
        dbeta[c] = dbeta[c] + g;
    }
    let mut dx = Tensor::zeros(&x_shape);
    {
        let dxd = dx.data_mut();
        let gd = gamma.data();
        for (i, &g) in god.iter().enumerate() {
            let c = bn_channel_of(&x_shape, i);
            let term = g - dbeta[c] / m - xh[i] * dgamma[c] / m;
            dxd[i] = gd[c] * cache.inv_std[c] * term;
        }
    }
    (dx, Tensor::from_vec(&[channels], dgamma), Tensor::from_vec(&[channels], dbeta))
}

fn bn_dims<S: Scalar>(x: &Tensor<S>) -> (usize, usize, usize) {
    match x.shape().len() {
        4 => (x.shape()[1], x.shape()[2] * x.shape()[3], x.shape()[0]),
        2 => (x.shape()[1], 1, x.shape()[0]),
        d => panic!("batchnorm expects 2D or 4D input, got {d}D"),
    }
}

fn bn_channel_of(shape: &[usize], flat: usize) -> usize {
    match shape.len() {
        4 => (flat / (shape[2] * shape[3])) % shape[1],
        2 => flat % shape[1],
        _ => unreachable!(),
    }
}

fn for_each_bn<S: Scalar>(x: &Tensor<S>, channel: usize, mut f: impl FnMut(S)) {
    let shape = x.shape();
    let xd = x.data();
    match shape.len() {
        4 => {
            let (n, c, sp) = (shape[0], shape[1], shape[2] * shape[3]);
            for ni in 0..n {
                let base = (ni * c + channel) * sp;
                for i in 0..sp {
                    f(xd[base + i]);
                }
            }
        }
        2 => {
            let (n, c) = (shape[0], shape[1]);
            for ni in 0..n {
                f(xd[ni * c + channel]);
            }
        }
        _ => unreachable!(),
    }
}
