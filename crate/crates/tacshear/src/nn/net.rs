//! Layer specs, parameter store and the forward/backward graph walker.

use std::collections::BTreeMap;

use crate::nn::ops::{self, BnCache};
use crate::nn::NnError;
use crate::rng::Stream;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const BN_MOMENTUM: f64 = 0.9;
pub const WEIGHT_INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv2d { in_ch: usize, out_ch: usize, kernel: usize, stride: usize },
    TConv2d { in_ch: usize, out_ch: usize, kernel: usize, stride: usize },
    Dense { in_features: usize, out_features: usize },
    BatchNorm { channels: usize },
    Relu,
    Sigmoid,
    MaxPool,
    Flatten,
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::TConv2d { .. } => "tconv2d",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::BatchNorm { .. } => "batchnorm",
            LayerSpec::Relu => "relu",
            LayerSpec::Sigmoid => "sigmoid",
            LayerSpec::MaxPool => "maxpool",
            LayerSpec::Flatten => "flatten",
        }
    }

    /// Output shape (excluding batch dim errors; batch passes through).
    pub fn out_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let bad = |why: String| NnError::ShapeMismatch { layer: self.kind_name().to_string(), why };
        match *self {
            LayerSpec::Conv2d { in_ch, out_ch, stride, .. } => {
                if input.len() != 4 || input[1] != in_ch {
                    return Err(bad(format!("expected [N,{in_ch},H,W], got {input:?}")));
                }
                Ok(vec![
                    input[0],
                    out_ch,
                    ops::conv_out_size(input[2], stride),
                    ops::conv_out_size(input[3], stride),
                ])
            }
            LayerSpec::TConv2d { in_ch, out_ch, stride, .. } => {
                if input.len() != 4 || input[1] != in_ch {
                    return Err(bad(format!("expected [N,{in_ch},H,W], got {input:?}")));
                }
                Ok(vec![input[0], out_ch, input[2] * stride, input[3] * stride])
            }
            LayerSpec::Dense { in_features, out_features } => {
                if input.len() != 2 || input[1] != in_features {
                    return Err(bad(format!("expected [N,{in_features}], got {input:?}")));
                }
                Ok(vec![input[0], out_features])
            }
            LayerSpec::BatchNorm { channels } => {
                let c = match input.len() {
                    4 => input[1],
                    2 => input[1],
                    _ => return Err(bad(format!("expected 2D/4D, got {input:?}"))),
                };
                if c != channels {
                    return Err(bad(format!("expected {channels} channels, got {input:?}")));
                }
                Ok(input.to_vec())
            }
            LayerSpec::Relu | LayerSpec::Sigmoid => Ok(input.to_vec()),
            LayerSpec::MaxPool => {
                if input.len() != 4 || input[2] % 2 != 0 || input[3] % 2 != 0 {
                    return Err(bad(format!("expected even [N,C,H,W], got {input:?}")));
                }
                Ok(vec![input[0], input[1], input[2] / 2, input[3] / 2])
            }
            LayerSpec::Flatten => {
                if input.len() < 2 {
                    return Err(bad(format!("expected >=2D, got {input:?}")));
                }
                Ok(vec![input[0], input[1..].iter().product()])
            }
        }
    }
}

/// Named parameter tensors (trainable and batchnorm running statistics).
#[derive(Debug, Clone, PartialEq)]
pub struct Params<S: Scalar> {
    pub tensors: BTreeMap<String, Tensor<S>>,
}

impl<S: Scalar> Params<S> {
    pub fn new() -> Self {
        Params { tensors: BTreeMap::new() }
    }

    pub fn get(&self, name: &str) -> &Tensor<S> {
        self.tensors.get(name).unwrap_or_else(|| panic!("missing parameter {name}"))
    }

    pub fn cast<T: Scalar>(&self) -> Params<T> {
        Params { tensors: self.tensors.iter().map(|(k, v)| (k.clone(), v.cast())).collect() }
    }

    pub fn merge(&mut self, other: Params<S>) {
        self.tensors.extend(other.tensors);
    }
}

impl<S: Scalar> Default for Params<S> {
    fn default() -> Self {
        Self::new()
    }
}

pub fn is_trainable(name: &str) -> bool {
    !(name.ends_with(".running_mean") || name.ends_with(".running_var"))
}

pub fn is_weight(name: &str) -> bool {
    name.ends_with(".weight")
}

pub type Grads<S> = BTreeMap<String, Tensor<S>>;

#[derive(Debug)]
enum LayerCache<S: Scalar> {
    Input(Tensor<S>),
    Pool { shape: Vec<usize>, arg: Vec<usize> },
    Bn(BnCache<S>),
    SigmoidOut(Tensor<S>),
    ReluIn(Tensor<S>),
    Shape(Vec<usize>),
}

/// Forward activations cache for one network pass.
pub struct Cache<S: Scalar> {
    layers: Vec<LayerCache<S>>,
}

/// A sequential network with a parameter-name prefix.
#[derive(Debug, Clone)]
pub struct Network {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

impl Network {
    pub fn new(name: &str, layers: Vec<LayerSpec>) -> Self {
        Network { name: name.to_string(), layers }
    }

    fn pname(&self, idx: usize, part: &str) -> String {
        format!("{}.{idx}.{part}", self.name)
    }

    pub fn out_shape(&self, mut shape: Vec<usize>) -> Result<Vec<usize>, NnError> {
        for l in &self.layers {
            shape = l.out_shape(&shape)?;
        }
        Ok(shape)
    }

    /// Weights ~ N(0, 0.02^2), biases/beta zero, gamma one, running stats
    /// (0, 1). Each tensor draws from its own named stream.
    pub fn init_params<S: Scalar>(&self, master_seed: u64) -> Params<S> {
        let mut p = Params::new();
        for (i, l) in self.layers.iter().enumerate() {
            let mut insert_normal = |name: String, shape: &[usize]| {
                let mut st = Stream::new(master_seed, &name);
                let data =
                    (0..shape.iter().product()).map(|_| S::from_f64_lossy(st.normal() * WEIGHT_INIT_STD)).collect();
                p.tensors.insert(name, Tensor::from_vec(shape, data));
            };
            match *l {
                LayerSpec::Conv2d { in_ch, out_ch, kernel, .. } => {
                    insert_normal(self.pname(i, "weight"), &[out_ch, in_ch, kernel, kernel]);
                    p.tensors.insert(self.pname(i, "bias"), Tensor::zeros(&[out_ch]));
                }
                LayerSpec::TConv2d { in_ch, out_ch, kernel, .. } => {
                    insert_normal(self.pname(i, "weight"), &[in_ch, out_ch, kernel, kernel]);
                    p.tensors.insert(self.pname(i, "bias"), Tensor::zeros(&[out_ch]));
                }
                LayerSpec::Dense { in_features, out_features } => {
                    insert_normal(self.pname(i, "weight"), &[out_features, in_features]);
                    p.tensors.insert(self.pname(i, "bias"), Tensor::zeros(&[out_features]));
                }
                LayerSpec::BatchNorm { channels } => {
                    p.tensors.insert(self.pname(i, "gamma"), Tensor::full(&[channels], S::one()));
                    p.tensors.insert(self.pname(i, "beta"), Tensor::zeros(&[channels]));
                    p.tensors.insert(self.pname(i, "running_mean"), Tensor::zeros(&[channels]));
                    p.tensors.insert(self.pname(i, "running_var"), Tensor::full(&[channels], S::one()));
                }
                _ => {}
            }
        }
        p
    }

    /// Training-mode forward: batch statistics, running stats updated.
    pub fn forward_train<S: Scalar>(
        &self,
        params: &mut Params<S>,
        input: &Tensor<S>,
    ) -> Result<(Tensor<S>, Cache<S>), NnError> {
        self.forward_impl(params, input, true)
    }

    /// Eval-mode forward: running statistics, no cache mutation.
    pub fn forward_eval<S: Scalar>(&self, params: &Params<S>, input: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        // Eval never mutates; clone the map handle cheaply via a shim.
        let mut shim = ParamsShim::Borrowed(params);
        Ok(self.forward_with(&mut shim, input, false)?.0)
    }

    fn forward_impl<S: Scalar>(
        &self,
        params: &mut Params<S>,
        input: &Tensor<S>,
        train: bool,
    ) -> Result<(Tensor<S>, Cache<S>), NnError> {
        let mut shim = ParamsShim::Mutable(params);
        self.forward_with(&mut shim, input, train)
    }

    fn forward_with<S: Scalar>(
        &self,
        params: &mut ParamsShim<'_, S>,
        input: &Tensor<S>,
        train: bool,
    ) -> Result<(Tensor<S>, Cache<S>), NnError> {
        let mut x = input.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            l.out_shape(x.shape())?;
            match *l {
                LayerSpec::Conv2d { stride, .. } => {
                    let w = params.get(&self.pname(i, "weight"));
                    let b = params.get(&self.pname(i, "bias"));
                    let out = ops::conv2d_forward(&x, &w, &b, stride);
                    caches.push(LayerCache::Input(std::mem::replace(&mut x, out)));
                }
                LayerSpec::TConv2d { stride, .. } => {
                    let w = params.get(&self.pname(i, "weight"));
                    let b = params.get(&self.pname(i, "bias"));
                    let out = ops::tconv2d_forward(&x, &w, &b, stride);
                    caches.push(LayerCache::Input(std::mem::replace(&mut x, out)));
                }
                LayerSpec::Dense { .. } => {
                    let w = params.get(&self.pname(i, "weight"));
                    let b = params.get(&self.pname(i, "bias"));
                    let out = ops::dense_forward(&x, &w, &b);
                    caches.push(LayerCache::Input(std::mem::replace(&mut x, out)));
                }
                LayerSpec::BatchNorm { .. } => {
                    let gamma = params.get(&self.pname(i, "gamma"));
                    let beta = params.get(&self.pname(i, "beta"));
                    let rm = params.get(&self.pname(i, "running_mean"));
                    let rv = params.get(&self.pname(i, "running_var"));
                    let (out, cache, mean, var) = ops::batchnorm_forward(&x, &gamma, &beta, &rm, &rv, train);
                    if train {
                        let mom = S::from_f64_lossy(BN_MOMENTUM);
                        let one_m = S::one() - mom;
                        let new_rm: Vec<S> =
                            rm.data().iter().zip(&mean).map(|(&r, &m)| mom * r + one_m * m).collect();
                        let new_rv: Vec<S> =
                            rv.data().iter().zip(&var).map(|(&r, &v)| mom * r + one_m * v).collect();
                        let shape = [mean.len()];
                        params.set(self.pname(i, "running_mean"), Tensor::from_vec(&shape, new_rm));
                        params.set(self.pname(i, "running_var"), Tensor::from_vec(&shape, new_rv));
                        caches.push(LayerCache::Bn(cache.expect("train-mode bn cache")));
                    } else {
                        caches.push(LayerCache::Shape(x.shape().to_vec()));
                    }
                    x = out;
                }
                LayerSpec::Relu => {
                    let out = ops::relu_forward(&x);
                    caches.push(LayerCache::ReluIn(std::mem::replace(&mut x, out)));
                }
                LayerSpec::Sigmoid => {
                    x = ops::sigmoid_forward(&x);
                    caches.push(LayerCache::SigmoidOut(x.clone()));
                }
                LayerSpec::MaxPool => {
                    let (out, arg) = ops::maxpool_forward(&x);
                    caches.push(LayerCache::Pool { shape: x.shape().to_vec(), arg });
                    x = out;
                }
                LayerSpec::Flatten => {
                    let shape = x.shape().to_vec();
                    let flat: usize = shape[1..].iter().product();
                    x = x.reshape(&[shape[0], flat]);
                    caches.push(LayerCache::Shape(shape));
                }
            }
        }
        Ok((x, Cache { layers: caches }))
    }

    /// Backward through the whole network. Returns parameter grads (trainable
    /// only) and the gradient w.r.t. the network input.
    pub fn backward<S: Scalar>(
        &self,
        params: &Params<S>,
        cache: &Cache<S>,
        upstream: &Tensor<S>,
    ) -> Result<(Grads<S>, Tensor<S>), NnError> {
        if cache.layers.len() != self.layers.len() {
            return Err(NnError::MissingCache);
        }
        let mut grads: Grads<S> = BTreeMap::new();
        let mut g = upstream.clone();
        for (i, l) in self.layers.iter().enumerate().rev() {
            match (*l, &cache.layers[i]) {
                (LayerSpec::Conv2d { stride, .. }, LayerCache::Input(x)) => {
                    let w = params.get(&self.pname(i, "weight"));
                    let (dx, dw, db) = ops::conv2d_backward(x, w, stride, &g);
                    grads.insert(self.pname(i, "weight"), dw);
                    grads.insert(self.pname(i, "bias"), db);
                    g = dx;
                }
                (LayerSpec::TConv2d { stride, .. }, LayerCache::Input(x)) => {
                    let w = params.get(&self.pname(i, "weight"));
                    let (dx, dw, db) = ops::tconv2d_backward(x, w, stride, &g);
                    grads.insert(self.pname(i, "weight"), dw);
                    grads.insert(self.pname(i, "bias"), db);
                    g = dx;
                }
                (LayerSpec::Dense { .. }, LayerCache::Input(x)) => {
                    let w = params.get(&self.pname(i, "weight"));
                    let (dx, dw, db) = ops::dense_backward(x, w, &g);
                    grads.insert(self.pname(i, "weight"), dw);
                    grads.insert(self.pname(i, "bias"), db);
                    g = dx;
                }
                (LayerSpec::BatchNorm { .. }, LayerCache::Bn(bn)) => {
                    let gamma = params.get(&self.pname(i, "gamma"));
                    let (dx, dgamma, dbeta) = ops::batchnorm_backward(bn, gamma, &g);
                    grads.insert(self.pname(i, "gamma"), dgamma);
                    grads.insert(self.pname(i, "beta"), dbeta);
                    g = dx;
                }
                (LayerSpec::Relu, LayerCache::ReluIn(x)) => {
                    g = ops::relu_backward(x, &g);
                }
                (LayerSpec::Sigmoid, LayerCache::SigmoidOut(y)) => {
                    g = ops::sigmoid_backward(y, &g);
                }
                (LayerSpec::MaxPool, LayerCache::Pool { shape, arg }) => {
                    g = ops::maxpool_backward(shape, arg, &g);
                }
                (LayerSpec::Flatten, LayerCache::Shape(shape)) => {
                    g = g.reshape(shape);
                }
                _ => return Err(NnError::MissingCache),
            }
        }
        Ok((grads, g))
    }
}

/// Borrowed-or-mutable parameter access for the shared forward walker.
enum ParamsShim<'a, S: Scalar> {
    Borrowed(&'a Params<S>),
    Mutable(&'a mut Params<S>),
}

impl<S: Scalar> ParamsShim<'_, S> {
    fn get(&self, name: &str) -> Tensor<S> {
        match self {
            ParamsShim::Borrowed(p) => p.get(name).clone(),
            ParamsShim::Mutable(p) => p.get(name).clone(),
        }
    }

    fn set(&mut self, name: String, t: Tensor<S>) {
        match self {
            ParamsShim::Borrowed(_) => panic!("eval forward must not mutate parameters"),
            ParamsShim::Mutable(p) => {
                p.tensors.insert(name, t);
            }
        }
    }
}

/// Add L1+L2 regularization gradients in place (weights only) and return the
/// regularization loss term.
pub fn add_regularization<S: Scalar>(params: &Params<S>, grads: &mut Grads<S>, l1: f64, l2: f64) -> S {
    let l1s = S::from_f64_lossy(l1);
    let l2s = S::from_f64_lossy(l2);
    let two = S::from_f64_lossy(2.0);
    let mut loss = S::zero();
    for (name, w) in &params.tensors {
        if !is_weight(name) {
            continue;
        }
        let g = grads.entry(name.clone()).or_insert_with(|| Tensor::zeros(w.shape()));
        for (gv, &wv) in g.data_mut().iter_mut().zip(w.data()) {
            let sign = if wv > S::zero() {
                S::one()
            } else if wv < S::zero() {
                -S::one()
            } else {
                S::zero()
            };
            *gv += two * l2s * wv + l1s * sign;
            loss = loss + l2s * wv * wv + l1s * wv.abs();
        }
    }
    loss
}
