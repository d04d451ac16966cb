use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real coefficient type carried by Pauli sums, Hamiltonians and the propagator.
///
/// Implemented for `f32` and `f64`. Everything in the Pauli-basis pipeline is
/// generic over this trait; the dense oracles always work in `f64`.
pub trait Real:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Literal conversion for constants that are exactly representable.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal fits the scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
