//! Floating-point abstraction used by the entropy computations.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A floating-point type entropy values can be computed in.
///
/// Implemented for `f32` and `f64`. Tolerances are per-type because the
/// incremental update path accumulates `c·log2(c)` sums whose rounding error
/// scales with the precision of the type.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Name written into model files.
    const NAME: &'static str;

    /// Absolute per-attribute tolerance for incremental-vs-rebuild agreement.
    fn oracle_tolerance() -> Self;

    /// Absolute tolerance when checking cached profiles in a loaded model.
    fn cache_tolerance() -> Self;

    fn from_count(count: u64) -> Self {
        Self::from_u64(count).expect("count representable as float")
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    fn oracle_tolerance() -> Self {
        1e-9
    }

    fn cache_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    fn oracle_tolerance() -> Self {
        1e-3
    }

    fn cache_tolerance() -> Self {
        1e-5
    }
}

/// Maps `-0.0` to `+0.0`; every other value passes through.
#[inline]
pub fn clear_negative_zero<F: Scalar>(value: F) -> F {
    if value == F::zero() {
        F::zero()
    } else {
        value
    }
}
