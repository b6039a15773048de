//! Finite-difference verification of the complete training graphs, run in
//! f64 on shrunken architectures so the check stays fast and tight.

use crate::models::arch::{ArchConfig, UnshearModel, Variant};
use crate::models::train::{batch_grads, TrainConfig};
use crate::nn::gradcheck::{max_rel_error, FD_STEP};
use crate::nn::{LayerSpec, Network, NnError, Params};
use crate::rng::Stream;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct GradcheckSummary {
    /// (case name, max relative error vs central differences).
    pub cases: Vec<(String, f64)>,
}

impl GradcheckSummary {
    pub fn worst(&self) -> f64 {
        self.cases.iter().fold(0.0, |m, c| m.max(c.1))
    }
}

fn random_tensor(shape: &[usize], stream: &mut Stream) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| stream.uniform()).collect())
}

/// Mean-squared-output loss over one small net.
fn check_layer_net(net: &Network, input_shape: &[usize], seed: u64) -> f64 {
    let mut st = Stream::new(seed, "check.layer");
    let input = random_tensor(input_shape, &mut st);
    let params: Params<f64> = net.init_params(seed);
    let loss = |p: &Params<f64>| {
        let mut p = p.clone();
        let (y, _) = net.forward_train(&mut p, &input).unwrap();
        y.data().iter().map(|v| v * v).sum::<f64>() / y.len() as f64
    };
    let mut p = params.clone();
    let (y, cache) = net.forward_train(&mut p, &input).unwrap();
    let n = y.len() as f64;
    let upstream = y.map(|v| 2.0 * v / n);
    let (grads, _) = net.backward(&params, &cache, &upstream).unwrap();
    max_rel_error(&params, &grads, loss, FD_STEP)
}

fn check_full_model(variant: Variant, seed: u64) -> Result<f64, NnError> {
    let model = UnshearModel::new(variant, ArchConfig::tiny());
    let params: Params<f64> = model.init_params(seed);
    let mut st = Stream::new(seed, "check.model");
    let x = random_tensor(&[2, 1, 16, 16], &mut st);
    let target = random_tensor(&[2, 1, 16, 16], &mut st);
    // Weight penalties are linear/trivial and verified separately; zeroing
    // them here keeps the finite-difference loss equal to the data terms.
    let cfg = TrainConfig { l1: 0.0, l2: 0.0, n_crops: 4, crop_size: 4, ..TrainConfig::default() };

    let mut p = params.clone();
    let (grads, _) = batch_grads(&model, &mut p, &x, &target, &cfg, &mut Stream::new(seed, "check.patch"))?;
    let loss = |p: &Params<f64>| {
        let mut p = p.clone();
        let (_, losses) =
            batch_grads(&model, &mut p, &x, &target, &cfg, &mut Stream::new(seed, "check.patch")).unwrap();
        losses.l_sup + cfg.lambda * losses.l_patch + losses.l_rec
    };
    Ok(max_rel_error(&params, &grads, loss, FD_STEP))
}

/// Every layer kind plus both complete training graphs.
pub fn gradcheck_suite(seed: u64) -> Result<GradcheckSummary, NnError> {
    let mut cases = Vec::new();
    let layer_nets: Vec<(&str, Network, Vec<usize>)> = vec![
        (
            "conv2d",
            Network::new("g", vec![LayerSpec::Conv2d { in_ch: 2, out_ch: 3, kernel: 3, stride: 2 }]),
            vec![2, 2, 8, 8],
        ),
        (
            "tconv2d",
            Network::new("g", vec![LayerSpec::TConv2d { in_ch: 3, out_ch: 2, kernel: 3, stride: 2 }]),
            vec![2, 3, 4, 4],
        ),
        (
            "dense",
            Network::new("g", vec![LayerSpec::Flatten, LayerSpec::Dense { in_features: 18, out_features: 5 }]),
            vec![3, 2, 3, 3],
        ),
        ("batchnorm", Network::new("g", vec![LayerSpec::BatchNorm { channels: 3 }]), vec![4, 3, 5, 5]),
        (
            "relu_pool_sigmoid",
            Network::new(
                "g",
                vec![
                    LayerSpec::Conv2d { in_ch: 1, out_ch: 2, kernel: 3, stride: 1 },
                    LayerSpec::Relu,
                    LayerSpec::MaxPool,
                    LayerSpec::Sigmoid,
                ],
            ),
            vec![2, 1, 6, 6],
        ),
    ];
    for (name, net, shape) in layer_nets {
        cases.push((name.to_string(), check_layer_net(&net, &shape, seed)));
    }
    cases.push(("entangled_graph".to_string(), check_full_model(Variant::Entangled, seed)?));
    cases.push(("disentangled_graph".to_string(), check_full_model(Variant::Disentangled, seed)?));
    Ok(GradcheckSummary { cases })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_graphs_match_finite_differences() {
        let summary = gradcheck_suite(7).unwrap();
        assert_eq!(summary.cases.len(), 7);
        for (name, err) in &summary.cases {
            assert!(*err < 1e-5, "{name}: {err}");
        }
    }
}
