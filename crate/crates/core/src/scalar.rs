//! Scalar abstraction for the numeric routines.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
///
/// Losses, model scoring, sampling, and the regression machinery are generic
/// over this trait; the pipeline instantiates everything at `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum<Self> + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` for constants and config values.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}
