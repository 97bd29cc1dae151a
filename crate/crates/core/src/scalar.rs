//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point types the estimators can run on.
///
/// Implemented for `f32` and `f64`. Everything that touches `ln`/`exp`
/// needs a transcendental type, so exact rationals are not supported.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Lossy for `f32`, exact for `f64`.
    fn lit(x: f64) -> Self;

    /// Converts a count.
    fn from_count(n: u64) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn from_count(n: u64) -> Self {
                n as $t
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
