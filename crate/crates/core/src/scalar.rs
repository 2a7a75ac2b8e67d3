//! Numeric abstractions.
//!
//! Two tiers: [`Scalar`] covers anything with ordered field arithmetic, which
//! includes exact rationals and is what the allocation and reward kernels
//! need. [`Real`] adds the transcendental operations required by the
//! neural network (`f32`, `f64`).

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Ordered field element.
pub trait Scalar: Num + NumAssign + PartialOrd + Copy + Debug + Send + Sync + 'static {
    /// `max(0, self)`.
    #[inline]
    fn ramp(self) -> Self {
        if self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }

    #[inline]
    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    #[inline]
    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Converts a small non-negative count, used for averaging.
    fn from_count(n: usize) -> Self {
        let mut out = Self::zero();
        for _ in 0..n {
            out += Self::one();
        }
        out
    }
}

impl<T> Scalar for T where T: Num + NumAssign + PartialOrd + Copy + Debug + Send + Sync + 'static {}

/// Floating point scalar used by the learning components.
pub trait Real:
    Scalar + Float + FromPrimitive + ToPrimitive + Display + FromStr + Default + std::iter::Sum
{
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
