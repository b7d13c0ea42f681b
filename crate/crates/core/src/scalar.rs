//! Floating point abstraction shared by confidence scoring and metrics.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used for edge confidences, path weights and evaluation scores.
///
/// Implemented for `f32` and `f64`. `Display` must produce a representation
/// that parses back to the same value through `FromStr`, which holds for the
/// standard float types.
pub trait Scalar:
    Float
    + FromPrimitive
    + Debug
    + Display
    + FromStr
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal is representable")
    }

    /// True when `self` lies in the closed unit interval.
    fn in_unit_interval(self) -> bool {
        self >= Self::zero() && self <= Self::one()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
