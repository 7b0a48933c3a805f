//! Scalar abstraction: the whole library is generic over the floating-point
//! type through this single bound.

use std::iter::Sum;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the library (`f32` or `f64`).
///
/// `RealField` supplies the elementary functions and exact constants,
/// `FromPrimitive`/`ToPrimitive` the conversions at serialization and
/// configuration boundaries.
pub trait Scalar: RealField + FromPrimitive + ToPrimitive + Sum + Copy {
    /// Lossless for `f32`/`f64`; used at output boundaries (files, reports).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl<T: RealField + FromPrimitive + ToPrimitive + Sum + Copy> Scalar for T {}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn real<S: Scalar>(v: f64) -> S {
    nalgebra::convert(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        let x: f32 = real(0.25);
        assert_eq!(x, 0.25f32);
        let y: f64 = real(0.1);
        assert_eq!(y, 0.1);
        assert_eq!(0.1f64.as_f64(), 0.1);
    }
}
