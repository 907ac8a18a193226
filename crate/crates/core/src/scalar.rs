//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + NumAssign + Debug + Display + LowerExp + Send + Sync + 'static {
    /// Converts an `f64` literal. Every `f64` is representable (possibly rounded) in the
    /// supported types, so this never fails for them.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal not representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(value, k * epsilon)`; used to keep default tolerances meaningful in `f32`.
    #[inline]
    fn at_least_eps(value: f64, k: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(k);
        Self::lit(value).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}
