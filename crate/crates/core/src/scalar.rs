//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Everything downstream of the parser is written against [`Real`], which is
//! implemented for `f32` and `f64`. The coefficient-only parts of
//! [`crate::poly`] accept the weaker [`Coefficient`] bound so that exact
//! types (e.g. rationals) can be used for symbolic checks.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use nalgebra::RealField;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Ring-like coefficient type for sparse polynomials.
pub trait Coefficient: Num + Clone + Debug + Send + Sync + 'static {
    /// Converts a small non-negative integer (an exponent) into the coefficient ring.
    fn from_count(n: u32) -> Self;
}

impl<T> Coefficient for T
where
    T: Num + Clone + Debug + Send + Sync + FromPrimitive + 'static,
{
    fn from_count(n: u32) -> Self {
        T::from_u32(n).expect("exponent representable in coefficient type")
    }
}

/// Floating point scalar used by the linear algebra, the SDP solver and extraction.
pub trait Real:
    RealField
    + Copy
    + Coefficient
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Display
    + LowerExp
    + Default
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Conversion to `f64` for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        nalgebra::convert(n as f64)
    }

    /// Machine epsilon of the type.
    fn eps() -> Self;
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}
