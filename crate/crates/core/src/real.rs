use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Scalar type the numerical core is generic over.
///
/// Implemented for `f32` and `f64`. Everything that must agree with reference
/// tables is exercised in `f64`; `f32` is supported for cheap exploratory sweeps.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion of an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest relative tolerance worth asking an iterative routine for.
    #[inline]
    fn tolerance_floor() -> Self {
        Self::epsilon() * Self::lit(50.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}
