use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point element type for the probability engines: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Convert an `f64` constant into this scalar type.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    /// Tolerance used when validating that a row is a probability distribution.
    ///
    /// 1e-12 for `f64`, widened to a few ulps-times-size for `f32`.
    fn normalization_tol(len: usize) -> Self {
        let eps = Self::epsilon() * Self::lit(64.0) * Self::lit(len.max(1) as f64);
        eps.max(Self::lit(1e-12))
    }

    /// Smallest strictly positive value a discriminative score is clamped to.
    fn probability_floor() -> Self {
        Self::lit(1e-300).max(Self::min_positive_value())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn row_sum<T: Scalar>(row: impl IntoIterator<Item = T>) -> T {
    row.into_iter().fold(T::zero(), |acc, v| acc + v)
}
