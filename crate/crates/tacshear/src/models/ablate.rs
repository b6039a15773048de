//! Latent-code swap ablation: rerun the decoders with the codes crossed to
//! show which one actually carries the contact geometry.

use crate::metrics::{mse, ms_ssim, SsimConfig};
use crate::models::arch::{concat_channels, UnshearModel, Variant};
use crate::models::train::PairImages;
use crate::nn::{NnError, Params};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    /// Canonical decoder fed the pose code (baseline) vs the shear code.
    pub dc_mse: f64,
    pub dc_mse_swapped: f64,
    pub dc_ssim: f64,
    pub dc_ssim_swapped: f64,
    /// Input-reconstruction decoder fed (z_p, z_s) vs (z_p, z_p).
    pub ds_mse: f64,
    pub ds_mse_swapped: f64,
    pub ds_ssim: f64,
    pub ds_ssim_swapped: f64,
    pub samples: usize,
}

impl AblationReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("decoder,variant,mse,ms_ssim\n");
        s.push_str(&format!("dc,baseline,{:.9},{:.9}\n", self.dc_mse, self.dc_ssim));
        s.push_str(&format!("dc,swapped,{:.9},{:.9}\n", self.dc_mse_swapped, self.dc_ssim_swapped));
        s.push_str(&format!("ds,baseline,{:.9},{:.9}\n", self.ds_mse, self.ds_ssim));
        s.push_str(&format!("ds,swapped,{:.9},{:.9}\n", self.ds_mse_swapped, self.ds_ssim_swapped));
        s
    }
}

/// Evaluate MSE and MS-SSIM with codes routed normally and crossed, over a
/// paired test set. Only meaningful for the disentangled variant.
pub fn ablate_swap_codes(
    model: &UnshearModel,
    params: &Params<f32>,
    pairs: &[PairImages],
    ssim_cfg: &SsimConfig,
) -> Result<AblationReport, NnError> {
    if model.variant != Variant::Disentangled {
        return Err(NnError::ShapeMismatch {
            layer: "ablation".into(),
            why: "code swap requires the disentangled variant".into(),
        });
    }
    assert!(!pairs.is_empty(), "empty test set");
    let dec_s = model.dec_s.as_ref().unwrap();
    let mut report = AblationReport {
        dc_mse: 0.0,
        dc_mse_swapped: 0.0,
        dc_ssim: 0.0,
        dc_ssim_swapped: 0.0,
        ds_mse: 0.0,
        ds_mse_swapped: 0.0,
        ds_ssim: 0.0,
        ds_ssim_swapped: 0.0,
        samples: pairs.len(),
    };
    for pair in pairs {
        let (h, w) = (pair.sheared.shape()[0], pair.sheared.shape()[1]);
        let x = pair.sheared.clone().reshape(&[1, 1, h, w]);
        let out = model.forward_eval(params, &x)?;
        let z_s = out.z_s.as_ref().unwrap();

        let flat = |t: &Tensor<f32>| t.clone().reshape(&[h, w]);
        let canonical = &pair.canonical;
        let sheared = &pair.sheared;

        let pc_swapped = flat(&model.dec_c.forward_eval(params, z_s)?);
        let ps_swapped = flat(&dec_s.forward_eval(params, &concat_channels(&out.z_p, &out.z_p))?);
        let pc = flat(&out.pc);
        let ps = flat(out.ps.as_ref().unwrap());

        report.dc_mse += mse(&pc, canonical);
        report.dc_mse_swapped += mse(&pc_swapped, canonical);
        report.dc_ssim += ms_ssim(&pc, canonical, ssim_cfg);
        report.dc_ssim_swapped += ms_ssim(&pc_swapped, canonical, ssim_cfg);
        report.ds_mse += mse(&ps, sheared);
        report.ds_mse_swapped += mse(&ps_swapped, sheared);
        report.ds_ssim += ms_ssim(&ps, sheared, ssim_cfg);
        report.ds_ssim_swapped += ms_ssim(&ps_swapped, sheared, ssim_cfg);
    }
    let n = pairs.len() as f64;
    for v in [
        &mut report.dc_mse,
        &mut report.dc_mse_swapped,
        &mut report.dc_ssim,
        &mut report.dc_ssim_swapped,
        &mut report.ds_mse,
        &mut report.ds_mse_swapped,
        &mut report.ds_ssim,
        &mut report.ds_ssim_swapped,
    ] {
        *v /= n;
    }
    Ok(report)
}
