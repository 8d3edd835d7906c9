//! Scalar abstraction shared by the geometry, dynamics and projection code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the simulation core can run on.
///
/// Everything that touches positions, probabilities or calcium traces is
/// generic over this trait. `f64` is what the dataset pipeline uses; `f32`
/// is supported for lighter experiments.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Maps 64 random bits onto `[0, 1)` using as many high bits as the
    /// mantissa holds, so the result is never rounded up to 1.
    fn unit_from_bits(bits: u64) -> Self;

    /// Lossless-enough literal conversion for constants.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits scalar")
    }
}

impl Real for f64 {
    #[inline]
    fn unit_from_bits(bits: u64) -> Self {
        (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl Real for f32 {
    #[inline]
    fn unit_from_bits(bits: u64) -> Self {
        (bits >> 40) as f32 * (1.0 / (1u32 << 24) as f32)
    }
}

/// Rounds half away from zero for non-negative inputs (i.e. half-up), floored at `min`.
#[inline]
pub(crate) fn round_half_up<T: Real>(value: T, min: u32) -> u32 {
    let r = (value + T::lit(0.5)).floor();
    r.to_u32().unwrap_or(u32::MAX).max(min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_is_half_open() {
        assert_eq!(f64::unit_from_bits(0), 0.0);
        assert!(f64::unit_from_bits(u64::MAX) < 1.0);
        assert!(f32::unit_from_bits(u64::MAX) < 1.0);
    }

    #[test]
    fn rounding_goes_up_at_half() {
        assert_eq!(round_half_up(2.5f64, 1), 3);
        assert_eq!(round_half_up(2.49f64, 1), 2);
        assert_eq!(round_half_up(0.2f64, 1), 1);
        assert_eq!(round_half_up(31.5f32, 1), 32);
    }
}
