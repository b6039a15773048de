//! Minimal dense/convolutional network kernel: analytic gradients, Adam,
//! deterministic initialization, checkpointing.

pub mod adam;
pub mod augment;
pub mod checkpoint;
pub mod gradcheck;
pub mod net;
pub mod ops;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use augment::{augment_shift, sample_shift, shift_image};
pub use checkpoint::ModelCheckpoint;
pub use net::{add_regularization, Cache, Grads, LayerSpec, Network, Params};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch in layer {layer}: {why}")]
    ShapeMismatch { layer: String, why: String },
    #[error("forward cache missing or inconsistent")]
    MissingCache,
    #[error("non-finite gradient for {name}")]
    NonFiniteGradient { name: String },
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
