//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the geometry and estimators are written against.
///
/// Implemented for `f32` and `f64`. Volumes are stored in the scalar type, so
/// `f32` halves memory traffic in the sampling loops at the cost of precision
/// in the orthogonality checks.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Tolerance on `|MᵀM - I|` entries and on `|det M| - 1`.
    const ORTHO_TOL: f64;

    /// Converts an `f64` literal. Never fails for the implemented types.
    #[inline(always)]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    #[inline(always)]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }
}

impl Real for f32 {
    const ORTHO_TOL: f64 = 1e-4;
}

impl Real for f64 {
    const ORTHO_TOL: f64 = 1e-9;
}
