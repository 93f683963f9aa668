//! Exact reference quotient and ulp-error measurement.
//!
//! Everything here is rational arithmetic with no rounding, so a margin
//! verdict can never be flipped by oracle-side error.

use crate::exact::pow2;
use crate::fixedpoint::FixedPoint;
use num_rational::BigRational;
use num_traits::Signed;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OracleError {
    #[error("division by zero")]
    DivisionByZero,
}

/// The infinitely precise quotient of two fixed-point operands.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactQuotient {
    value: BigRational,
}

impl ExactQuotient {
    pub fn value(&self) -> &BigRational {
        &self.value
    }

    /// Signed error of an approximation: `approx - value`.
    pub fn error_of(&self, approx: &FixedPoint) -> BigRational {
        approx.to_rational() - &self.value
    }

    /// Signed error scaled to ulps of a `frac_bits`-wide result.
    pub fn error_in_ulp(&self, approx: &FixedPoint, frac_bits: u32) -> BigRational {
        self.error_of(approx) * pow2(frac_bits as i64)
    }
}

pub fn exact_quotient(a: &FixedPoint, b: &FixedPoint) -> Result<ExactQuotient, OracleError> {
    if b.is_zero() {
        return Err(OracleError::DivisionByZero);
    }
    Ok(ExactQuotient { value: a.to_rational() / b.to_rational() })
}

/// Outcome of the correct-rounding margin test `|approx - exact| < 2^-(n+1)`.
#[derive(Clone, Debug)]
pub struct MarginCheck {
    pub pass: bool,
    /// Exact signed error `approx - exact`.
    pub error: BigRational,
    /// The same error in ulps of the approximation's width.
    pub error_ulps: BigRational,
    /// The margin `2^-(n+1)` the error was held against.
    pub margin: BigRational,
}

/// Strict margin check for `n` target mantissa bits. Equality with the
/// margin fails: the downstream rounding step needs the open bound.
pub fn check_margin(approx: &FixedPoint, exact: &ExactQuotient, mantissa_bits: u32) -> MarginCheck {
    let error = exact.error_of(approx);
    let margin = pow2(-(mantissa_bits as i64 + 1));
    MarginCheck {
        pass: error.abs() < margin,
        error_ulps: &error * pow2(approx.frac_bits() as i64),
        error,
        margin,
    }
}
