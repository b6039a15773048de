//! Unshearing network graphs: shared encoder trunk, code heads, and the
//! canonical / sheared decoders, with the routing that keeps the canonical
//! decoder blind to the shear code.

use crate::nn::{LayerSpec, Network, NnError, Params};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Entangled,
    Disentangled,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Entangled => "entangled",
            Variant::Disentangled => "disentangled",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "entangled" => Some(Variant::Entangled),
            "disentangled" => Some(Variant::Disentangled),
            _ => None,
        }
    }
}

/// Channel/stride plan shared by both variants. The trunk halves the spatial
/// side on every strided stage; decoders mirror it with transposed layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchConfig {
    pub input_size: usize,
    pub enc_channels: Vec<usize>,
    pub enc_strides: Vec<usize>,
    /// Channels per latent code head (pose and shear each).
    pub code_channels: usize,
    pub kernel: usize,
}

impl ArchConfig {
    pub fn desk() -> Self {
        ArchConfig {
            input_size: 64,
            enc_channels: vec![8, 16, 32, 32, 32],
            enc_strides: vec![2, 2, 2, 2, 1],
            code_channels: 16,
            kernel: 3,
        }
    }

    /// Shrunken plan for finite-difference checks of the full graphs.
    pub fn tiny() -> Self {
        ArchConfig {
            input_size: 16,
            enc_channels: vec![2, 3, 4],
            enc_strides: vec![2, 2, 2],
            code_channels: 3,
            kernel: 3,
        }
    }

    /// Spatial side of the latent code.
    pub fn code_size(&self) -> usize {
        let mut s = self.input_size;
        for &st in &self.enc_strides {
            s = s.div_ceil(st);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct UnshearModel {
    pub variant: Variant,
    pub arch: ArchConfig,
    pub encoder: Network,
    /// Disentangled: pose head (code_channels out). Entangled: the single
    /// full-code head (2 x code_channels out).
    pub head_p: Network,
    pub head_s: Option<Network>,
    /// Canonical decoder (DC; the only decoder for the entangled variant).
    pub dec_c: Network,
    /// Input-reconstruction decoder (DS), disentangled only.
    pub dec_s: Option<Network>,
}

fn head_layers(in_ch: usize, out_ch: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv2d { in_ch, out_ch, kernel: 1, stride: 1 },
        LayerSpec::BatchNorm { channels: out_ch },
        LayerSpec::Relu,
    ]
}

impl UnshearModel {
    pub fn new(variant: Variant, arch: ArchConfig) -> Self {
        let k = arch.kernel;
        let mut enc = Vec::new();
        let mut in_ch = 1;
        for (&out_ch, &stride) in arch.enc_channels.iter().zip(&arch.enc_strides) {
            enc.push(LayerSpec::Conv2d { in_ch, out_ch, kernel: k, stride });
            enc.push(LayerSpec::BatchNorm { channels: out_ch });
            enc.push(LayerSpec::Relu);
            in_ch = out_ch;
        }
        let trunk_ch = *arch.enc_channels.last().unwrap();

        let decoder = |name: &str, code_in: usize| {
            let mut layers = Vec::new();
            let mut ch = code_in;
            let n = arch.enc_channels.len();
            for stage in (0..n).rev() {
                let out_ch = if stage == 0 { 1 } else { arch.enc_channels[stage - 1] };
                let stride = arch.enc_strides[stage];
                layers.push(LayerSpec::TConv2d { in_ch: ch, out_ch, kernel: k, stride });
                if stage == 0 {
                    layers.push(LayerSpec::Sigmoid);
                } else {
                    layers.push(LayerSpec::BatchNorm { channels: out_ch });
                    layers.push(LayerSpec::Relu);
                }
                ch = out_ch;
            }
            Network::new(name, layers)
        };

        match variant {
            Variant::Entangled => UnshearModel {
                variant,
                head_p: Network::new("z", head_layers(trunk_ch, 2 * arch.code_channels)),
                head_s: None,
                dec_c: decoder("dc", 2 * arch.code_channels),
                dec_s: None,
                encoder: Network::new("enc", enc),
                arch,
            },
            Variant::Disentangled => UnshearModel {
                variant,
                head_p: Network::new("zp", head_layers(trunk_ch, arch.code_channels)),
                head_s: Some(Network::new("zs", head_layers(trunk_ch, arch.code_channels))),
                dec_c: decoder("dc", arch.code_channels),
                dec_s: Some(decoder("ds", 2 * arch.code_channels)),
                encoder: Network::new("enc", enc),
                arch,
            },
        }
    }

    pub fn networks(&self) -> Vec<&Network> {
        let mut nets = vec![&self.encoder, &self.head_p];
        if let Some(h) = &self.head_s {
            nets.push(h);
        }
        nets.push(&self.dec_c);
        if let Some(d) = &self.dec_s {
            nets.push(d);
        }
        nets
    }

    pub fn init_params<S: Scalar>(&self, master_seed: u64) -> Params<S> {
        let mut p = Params::new();
        for net in self.networks() {
            p.merge(net.init_params(master_seed));
        }
        p
    }

    /// Eval-mode forward pass. Returns the predicted canonical image, the
    /// input reconstruction (disentangled only), and the latent codes.
    pub fn forward_eval<S: Scalar>(&self, params: &Params<S>, x: &Tensor<S>) -> Result<UnshearOutput<S>, NnError> {
        let trunk = self.encoder.forward_eval(params, x)?;
        let z_p = self.head_p.forward_eval(params, &trunk)?;
        match (&self.head_s, &self.dec_s) {
            (Some(head_s), Some(dec_s)) => {
                let z_s = head_s.forward_eval(params, &trunk)?;
                let pc = self.dec_c.forward_eval(params, &z_p)?;
                let ps = dec_s.forward_eval(params, &concat_channels(&z_p, &z_s))?;
                Ok(UnshearOutput { pc, ps: Some(ps), z_p, z_s: Some(z_s) })
            }
            _ => {
                let pc = self.dec_c.forward_eval(params, &z_p)?;
                Ok(UnshearOutput { pc, ps: None, z_p, z_s: None })
            }
        }
    }

    /// Unshear one [H, W] image in [0, 1]; output has the same shape.
    pub fn unshear<S: Scalar>(&self, params: &Params<S>, image: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        assert_eq!(image.shape().len(), 2, "expected [H, W] image");
        let (h, w) = (image.shape()[0], image.shape()[1]);
        let x = image.clone().reshape(&[1, 1, h, w]);
        let out = self.forward_eval(params, &x)?;
        if !out.pc.all_finite() {
            return Err(NnError::NonFiniteGradient { name: "unshear output".into() });
        }
        Ok(out.pc.reshape(&[h, w]))
    }
}

#[derive(Debug, Clone)]
pub struct UnshearOutput<S: Scalar> {
    pub pc: Tensor<S>,
    pub ps: Option<Tensor<S>>,
    pub z_p: Tensor<S>,
    pub z_s: Option<Tensor<S>>,
}

/// Join two [N, C, H, W] tensors along the channel axis.
pub fn concat_channels<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    assert_eq!(a.shape().len(), 4);
    assert_eq!(a.shape()[0], b.shape()[0]);
    assert_eq!(a.shape()[2..], b.shape()[2..]);
    let (n, ca, h, w) = (a.shape()[0], a.shape()[1], a.shape()[2], a.shape()[3]);
    let cb = b.shape()[1];
    let plane = h * w;
    let mut out = Vec::with_capacity(n * (ca + cb) * plane);
    for i in 0..n {
        out.extend_from_slice(&a.data()[i * ca * plane..(i + 1) * ca * plane]);
        out.extend_from_slice(&b.data()[i * cb * plane..(i + 1) * cb * plane]);
    }
    Tensor::from_vec(&[n, ca + cb, h, w], out)
}

/// Split a [N, Ca+Cb, H, W] tensor back into channel blocks of Ca and Cb.
pub fn split_channels<S: Scalar>(x: &Tensor<S>, ca: usize) -> (Tensor<S>, Tensor<S>) {
    assert_eq!(x.shape().len(), 4);
    let (n, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    assert!(ca < c);
    let cb = c - ca;
    let plane = h * w;
    let mut da = Vec::with_capacity(n * ca * plane);
    let mut db = Vec::with_capacity(n * cb * plane);
    for i in 0..n {
        let base = i * c * plane;
        da.extend_from_slice(&x.data()[base..base + ca * plane]);
        db.extend_from_slice(&x.data()[base + ca * plane..base + c * plane]);
    }
    (Tensor::from_vec(&[n, ca, h, w], da), Tensor::from_vec(&[n, cb, h, w], db))
}
