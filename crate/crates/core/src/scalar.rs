use std::fmt::{Debug, Display};

use num_traits::float::TotalOrder;
use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating point type the estimators are generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumCast
    + TotalOrder
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    fn of(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 constant representable in scalar type")
    }

    fn of_usize(v: usize) -> Self {
        <Self as NumCast>::from(v).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
