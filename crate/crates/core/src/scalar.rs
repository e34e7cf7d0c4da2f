//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use clarabel::algebra::FloatT;
use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the relaxation machinery is generic over.
///
/// Implemented for `f32` and `f64`. The bound on [`FloatT`] lets the same
/// type flow straight into the interior-point backend.
pub trait Scalar:
    Float
    + FloatT
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Display
    + LowerExp
    + Debug
    + Default
    + Sum
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for the implemented types.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Converts a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Largest absolute entry; zero for an empty slice.
pub(crate) fn inf_norm<T: Scalar>(xs: &[T]) -> T {
    xs.iter()
        .fold(T::zero(), |acc, &x| Float::max(acc, Float::abs(x)))
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm2<T: Scalar>(xs: &[T]) -> T {
    Float::sqrt(xs.iter().map(|&x| x * x).sum::<T>())
}
