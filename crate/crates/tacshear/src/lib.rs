//! Simulated soft optical tactile sensing with shear disentanglement:
//! a marker-membrane contact simulator, paired tap/slide dataset tooling,
//! a small CNN stack with analytic gradients, unshearing and pose models,
//! Voronoi contact-geometry reconstruction and a PI contour-following loop.

pub mod dataset;
pub mod eval;
pub mod geom;
pub mod geometry;
pub mod servo;
pub mod metrics;
pub mod models;
pub mod posenet;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod nn;
pub mod tensor;

pub use scalar::{Check, Real, Scalar};
