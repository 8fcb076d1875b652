//! Scalar abstraction for the numeric core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use rand::distr::uniform::SampleUniform;

/// Floating-point scalar the core math is generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum<Self>
    + SampleUniform
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant into `T`. Panics only if `T` cannot represent
/// any finite `f64` at all, which no `Real` impl satisfies.
pub fn cast<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant representable in scalar type")
}

/// Widens `T` back to `f64` for reporting and serialization.
pub fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().expect("scalar convertible to f64")
}
