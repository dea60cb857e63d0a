//! Scalar abstraction shared by the control blocks and the metric estimators.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar the dynamic blocks are written against.
///
/// Implemented for `f32` and `f64`. The network layer is concrete `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Nominal system frequency in Hz.
pub const F_NOMINAL_HZ: f64 = 60.0;

/// Synchronous speed in electrical rad/s.
#[inline]
pub fn omega_base<T: Real>() -> T {
    T::lit(2.0) * T::PI() * T::lit(F_NOMINAL_HZ)
}
