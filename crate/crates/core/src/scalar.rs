//! Scalar types for weights, partition functions and hyperdeterminants.
//!
//! Anything that behaves like a field with an order works: exact [`Rational`] for identity
//! checks and `f64` for Monte Carlo.

use std::fmt::Debug;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, Num, ToPrimitive};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub trait Scalar:
    Clone + Debug + PartialEq + PartialOrd + Num + FromPrimitive + ToPrimitive + Send + Sync
{
    fn from_int(k: i64) -> Self {
        Self::from_i64(k).expect("integer fits every scalar")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Clone + Debug + PartialEq + PartialOrd + Num + FromPrimitive + ToPrimitive + Send + Sync
{
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_ratio64(s: &str) -> Result<Rational64> {
    Rational64::from_str(s.trim()).map_err(|e| Error::Invalid(format!("bad rational {s:?}: {e}")))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    BigRational::from_str(s.trim()).map_err(|e| Error::Invalid(format!("bad rational {s:?}: {e}")))
}

pub fn ratio64_to_big(r: &Rational64) -> Rational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}
