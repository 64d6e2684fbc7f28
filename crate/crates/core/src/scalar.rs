use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating point type the engine computes in: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumCast
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant; values outside the type's range saturate.
    fn lit(x: f64) -> Self {
        let v = <Self as NumCast>::from(x).unwrap_or_else(Self::nan);
        if v.is_infinite() && x.is_finite() {
            if x > 0.0 {
                Self::max_value()
            } else {
                Self::min_value()
            }
        } else {
            v
        }
    }

    fn of_usize(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("usize fits in a float")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
