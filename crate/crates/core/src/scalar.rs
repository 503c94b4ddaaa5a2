//! Scalar abstraction: every module is generic over the underlying real
//! float type, so the whole pipeline runs at `f32` or `f64` (the CLI and all
//! shipped tolerances use `f64`).

use std::fmt;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar underlying all complex arithmetic.
///
/// A blanket impl covers `f32` and `f64`; nothing here is object-safe or
/// meant to be implemented by hand.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for converting literal tolerances and constants.
    /// Panics only if the float type cannot represent any f64 at all,
    /// which cannot happen for IEEE types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal conversion")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + fmt::Debug
        + fmt::Display
        + fmt::LowerExp
        + Send
        + Sync
        + 'static
{
}
