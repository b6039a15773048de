//! Scalar abstraction so the numeric kernels can run in `f32` for speed and
//! `f64` for finite-difference verification.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Sum + Copy + Send + Sync + Debug + Display + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 -> scalar")
    }
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar -> f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Compute scalar used for training and inference.
pub type Real = f32;
/// Shadow scalar used by gradient checks.
pub type Check = f64;
