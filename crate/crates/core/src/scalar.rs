//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All operators are written against [`Real`] so that the same code runs in
//! `f32` and `f64`. Accuracy targets quoted in the documentation refer to `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point type usable by the grid operators.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every literal used in the crate is
    /// representable in both supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn from_isize_lossy(n: isize) -> Self {
        Self::from_isize(n).expect("offset representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Number of Borwein terms needed for full precision in alternating series.
    fn series_terms() -> usize;
}

impl Real for f32 {
    fn series_terms() -> usize {
        16
    }
}

impl Real for f64 {
    fn series_terms() -> usize {
        32
    }
}

/// A point in the plane; one-dimensional data uses the first coordinate only.
pub type Point<T> = [T; 2];

#[inline]
pub(crate) fn norm2<T: Real>(p: Point<T>) -> T {
    p[0].hypot(p[1])
}

#[inline]
pub(crate) fn sub<T: Real>(a: Point<T>, b: Point<T>) -> Point<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dot<T: Real>(a: Point<T>, b: Point<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}
