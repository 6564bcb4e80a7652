//! Floating-point scalar abstraction shared by the transport solvers and the
//! trainable heads.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type usable by the numeric kernels (`f32` or `f64`).
pub trait Scalar: Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count into `Self`.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Lossy widening to `f64` for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance floor appropriate for this precision.
    fn tolerance_floor() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_floor_tracks_precision() {
        assert_eq!(f64::tolerance_floor(), 1e-12);
        assert!(f32::tolerance_floor() > 1e-6);
    }
}
