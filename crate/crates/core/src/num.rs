//! Scalar abstraction for score arithmetic.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used by metrics and similarity scores: f32 or f64.
pub trait Scalar: Float + FromPrimitive + Debug + Send + Sync + 'static {
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite constant")
    }

    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits scalar")
    }

    fn hundred() -> Self {
        Self::of(100.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Two-decimal half-up rounding, applied only when reporting.
pub fn round2<F: Scalar>(x: F) -> F {
    let h = F::hundred();
    let scaled = x * h;
    let floor = scaled.floor();
    // half-up on the decimal value: nudge by a few ulps so 99.21875 -> 99.22
    let frac = scaled - floor;
    if frac + F::of(1e-9) >= F::of(0.5) {
        (floor + F::one()) / h
    } else {
        floor / h
    }
}
