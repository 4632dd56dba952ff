//! Generic scalar abstraction for all numeric kernels.
//!
//! Every algorithm in this crate is written against the [`Float`] trait so the
//! same code runs in `f32` or `f64`. The shipped CLI and all stated tolerances
//! assume `f64`; `f32` is supported for callers that can live with the reduced
//! precision.

use num_traits::{FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar used throughout the crate.
pub trait Float:
    'static
    + Send
    + Sync
    + num_traits::Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + Default
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
{
    /// Lossy conversion from `f64`, for constants and tolerances.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant must convert")
    }

    /// Lossy conversion to `f64`, for reporting.
    fn to_f64_lossy(self) -> f64;
}

impl Float for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Float for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// Shorthand used by numeric code for `T::from_f64_lossy`.
#[inline]
pub fn real<T: Float>(v: f64) -> T {
    T::from_f64_lossy(v)
}
