//! Floating-point scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real scalar used for feature weights and model parameters.
///
/// Implemented for `f32` and `f64`. `Display` must round-trip through
/// `FromStr` exactly, which both primitive float types guarantee; model
/// files rely on it for bit-identical reloads.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Display + Debug + FromStr + Default + Send + Sync + 'static
{
    /// Name written into model files.
    const NAME: &'static str;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";
}

/// Scores within this distance are treated as tied. Covers accumulated
/// rounding in a sum of a few dozen log terms.
pub(crate) fn tie_tolerance<T: Scalar>(a: T, b: T) -> T {
    let scale = T::one().max(a.abs()).max(b.abs());
    T::epsilon() * T::lit(256.0) * scale
}
