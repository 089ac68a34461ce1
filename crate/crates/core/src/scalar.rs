//! Scalar abstraction: the whole library is generic over the floating-point
//! type through the [`Real`] trait, with `f64` as the shipped default
//! (`f32` compiles and runs, at reduced accuracy).

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar usable throughout the crate.
///
/// This is a trait alias over the `num-traits` machinery plus the formatting
/// and threading bounds the report writers and parallel assembly need.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for converting an `f64` literal into `Self`.
    ///
    /// Panics only if the target type cannot represent any `f64` at all,
    /// which is impossible for the shipped scalars.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must convert into Real scalar")
    }

    /// Conversion from usize (node counts, level indices) used in formulas.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize must convert into Real scalar")
    }

    /// Round-trip into `f64` for report emission.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real scalar must convert into f64")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}
