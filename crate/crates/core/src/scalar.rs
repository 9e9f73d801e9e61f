//! Scalar abstraction for the numerical kernels.
//!
//! The quadrature, Runge-Kutta and root-bracketing kernels in [`crate::num`]
//! are written against this trait so they work for `f32`/`f64` alike; the
//! domain layer uses the [`crate::Real`] alias throughout.

use num_traits::Float;
use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating scalar usable by the numeric kernels.
///
/// This is [`num_traits::Float`] plus the assignment operators, `Sum`, and
/// conversion from small literals. It is implemented by any type with the
/// right bounds (in particular `f32` and `f64`).
pub trait Scalar:
    Float + AddAssign + SubAssign + MulAssign + DivAssign + Sum + Debug + Default + 'static
{
    /// Lossy conversion from `f64`, for tableau constants and tolerances.
    fn of(x: f64) -> Self;
}

impl<T> Scalar for T
where
    T: Float + AddAssign + SubAssign + MulAssign + DivAssign + Sum + Debug + Default + 'static,
{
    fn of(x: f64) -> Self {
        T::from(x).expect("finite literal must convert into a float scalar")
    }
}
