//! Exact unsigned fixed-point values of declared width, with the truncation,
//! complement and rectangular-multiply primitives the iteration datapath is
//! made of.
//!
//! A value is `significand * 2^-frac_bits` with `significand <
//! 2^(int_bits+frac_bits)`. Products are formed at full precision and only
//! then truncated, so every truncation error is an exact dyadic in
//! `[0, 2^-new_frac_bits)` and is handed back to the caller instead of being
//! recomputed.

use crate::exact::{dyadic_ratio, Dyadic};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FixedPointError {
    #[error("significand needs {needed} bits but only {available} are declared")]
    WidthOverflow { needed: u64, available: u64 },
    #[error("truncating to {requested} fractional bits would widen a value with {actual}")]
    TruncateWouldWiden { requested: u32, actual: u32 },
    #[error("operand must have exactly 1 integer bit, got {0}")]
    IntBitsNotOne(u32),
    #[error("complement of zero does not fit in 1 integer bit")]
    ComplementOverflow,
    #[error("factor delta magnitude {mag_log2:.2} bits violates the {omitted}-bit leading pattern")]
    DeltaTooWide { omitted: u32, mag_log2: f64 },
    #[error("invalid binary literal {0:?}")]
    BadLiteral(String),
    #[error("subtraction would underflow below zero")]
    Underflow,
}

/// Exact unsigned fixed-point value: `significand * 2^-frac_bits`.
#[derive(Clone, PartialEq, Eq)]
pub struct FixedPoint {
    significand: BigUint,
    int_bits: u32,
    frac_bits: u32,
}

impl fmt::Debug for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FixedPoint({} @ {}i.{}f)", self.to_binary_string(), self.int_bits, self.frac_bits)
    }
}

impl fmt::Display for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_binary_string())
    }
}

/// Truncation residue: the exact dyadic chopped off, in `[0, 2^-kept_frac_bits)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncError {
    residue: BigUint,
    scale_bits: u32,
}

impl TruncError {
    pub fn zero() -> Self {
        TruncError { residue: BigUint::zero(), scale_bits: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.residue.is_zero()
    }

    pub fn to_rational(&self) -> BigRational {
        dyadic_ratio(BigInt::from(self.residue.clone()), -(self.scale_bits as i64))
    }

    pub fn to_dyadic(&self) -> Dyadic {
        Dyadic::new(BigInt::from(self.residue.clone()), -(self.scale_bits as i64))
    }
}

impl FixedPoint {
    pub fn new(significand: BigUint, int_bits: u32, frac_bits: u32) -> Result<Self, FixedPointError> {
        let width = int_bits as u64 + frac_bits as u64;
        if significand.bits() > width {
            return Err(FixedPointError::WidthOverflow { needed: significand.bits(), available: width });
        }
        Ok(FixedPoint { significand, int_bits, frac_bits })
    }

    pub fn zero(int_bits: u32, frac_bits: u32) -> Self {
        FixedPoint { significand: BigUint::zero(), int_bits, frac_bits }
    }

    pub fn one(frac_bits: u32) -> Self {
        FixedPoint { significand: BigUint::one() << frac_bits, int_bits: 1, frac_bits }
    }

    /// Constant 2, needs two integer bits.
    pub fn two(frac_bits: u32) -> Self {
        FixedPoint { significand: BigUint::from(2u32) << frac_bits, int_bits: 2, frac_bits }
    }

    /// Parses a binary literal like "1.0110" or "0.111" bit-exactly.
    pub fn from_binary_str(s: &str) -> Result<Self, FixedPointError> {
        let bad = || FixedPointError::BadLiteral(s.to_string());
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let mut sig = BigUint::zero();
        for c in int_part.chars().chain(frac_part.chars()) {
            match c {
                '0' => sig = &sig << 1u32,
                '1' => sig = (&sig << 1u32) | BigUint::one(),
                _ => return Err(bad()),
            }
        }
        FixedPoint::new(sig, int_part.len().max(1) as u32, frac_part.len() as u32)
    }

    pub fn to_binary_string(&self) -> String {
        let total = (self.int_bits + self.frac_bits) as usize;
        let mut bits = String::with_capacity(total + 1);
        for i in (0..total).rev() {
            bits.push(if self.significand.bit(i as u64) { '1' } else { '0' });
        }
        if self.frac_bits == 0 {
            return bits;
        }
        let split = self.int_bits as usize;
        format!("{}.{}", &bits[..split], &bits[split..])
    }

    pub fn significand(&self) -> &BigUint {
        &self.significand
    }

    pub fn int_bits(&self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn is_zero(&self) -> bool {
        self.significand.is_zero()
    }

    pub fn to_rational(&self) -> BigRational {
        dyadic_ratio(BigInt::from(self.significand.clone()), -(self.frac_bits as i64))
    }

    pub fn to_dyadic(&self) -> Dyadic {
        Dyadic::new(BigInt::from(self.significand.clone()), -(self.frac_bits as i64))
    }

    /// One unit in the last place: `2^-frac_bits`.
    pub fn ulp(&self) -> BigRational {
        crate::exact::pow2(-(self.frac_bits as i64))
    }

    /// Compares the represented values regardless of declared widths.
    pub fn cmp_value(&self, other: &FixedPoint) -> Ordering {
        let f = self.frac_bits.max(other.frac_bits);
        let a = &self.significand << (f - self.frac_bits);
        let b = &other.significand << (f - other.frac_bits);
        a.cmp(&b)
    }

    /// Adds fractional bits; the represented value is unchanged.
    pub fn widen_frac(&self, new_frac_bits: u32) -> FixedPoint {
        assert!(new_frac_bits >= self.frac_bits, "widen_frac cannot drop bits");
        FixedPoint {
            significand: &self.significand << (new_frac_bits - self.frac_bits),
            int_bits: self.int_bits,
            frac_bits: new_frac_bits,
        }
    }

    /// Re-declares the integer width. Shrinking checks that the value fits.
    pub fn with_int_bits(&self, int_bits: u32) -> Result<FixedPoint, FixedPointError> {
        let width = int_bits as u64 + self.frac_bits as u64;
        if self.significand.bits() > width {
            return Err(FixedPointError::WidthOverflow { needed: self.significand.bits(), available: width });
        }
        Ok(FixedPoint { significand: self.significand.clone(), int_bits, frac_bits: self.frac_bits })
    }

    /// Multiplies by `2^n` exactly (grows the integer part).
    pub fn shift_left(&self, n: u32) -> FixedPoint {
        FixedPoint {
            significand: &self.significand << n,
            int_bits: self.int_bits + n,
            frac_bits: self.frac_bits,
        }
    }

    /// Drops fractional bits, returning the kept value and the exact residue.
    /// Truncation only ever shortens: widening is `widen_frac` and is error free.
    pub fn truncate_to(&self, new_frac_bits: u32) -> Result<(FixedPoint, TruncError), FixedPointError> {
        if new_frac_bits > self.frac_bits {
            return Err(FixedPointError::TruncateWouldWiden { requested: new_frac_bits, actual: self.frac_bits });
        }
        let drop = self.frac_bits - new_frac_bits;
        if drop == 0 {
            return Ok((self.clone(), TruncError::zero()));
        }
        let residue = &self.significand & ((BigUint::one() << drop) - BigUint::one());
        let kept = &self.significand >> drop;
        Ok((
            FixedPoint { significand: kept, int_bits: self.int_bits, frac_bits: new_frac_bits },
            TruncError { residue, scale_bits: self.frac_bits },
        ))
    }

    /// Adds a signed multiple of the value's own ulp. Errors on underflow or
    /// integer-width overflow.
    pub fn add_ulps(&self, ulps: i64) -> Result<FixedPoint, FixedPointError> {
        let sig = BigInt::from(self.significand.clone()) + BigInt::from(ulps);
        let sig = sig.to_biguint().ok_or(FixedPointError::Underflow)?;
        FixedPoint::new(sig, self.int_bits, self.frac_bits)
    }
}

/// Exact full-precision product; fractional bits add, nothing is dropped.
pub fn mul_exact(a: &FixedPoint, b: &FixedPoint) -> FixedPoint {
    FixedPoint {
        significand: &a.significand * &b.significand,
        int_bits: a.int_bits + b.int_bits,
        frac_bits: a.frac_bits + b.frac_bits,
    }
}

/// `2 - d - ulp` computed as bitwise inversion of all stored bits of `d`.
/// Requires `d` to span exactly one integer bit (value in `[0, 2)`); the
/// identity `result + d = 2 - ulp` holds exactly.
pub fn ones_complement_from_two(d: &FixedPoint) -> Result<FixedPoint, FixedPointError> {
    if d.int_bits != 1 {
        return Err(FixedPointError::IntBitsNotOne(d.int_bits));
    }
    let all_ones = (BigUint::one() << (d.frac_bits + 1)) - BigUint::one();
    let sig = all_ones ^ &d.significand;
    Ok(FixedPoint { significand: sig, int_bits: 1, frac_bits: d.frac_bits })
}

/// `2 - d` exactly (the carry-completed subtraction). Requires one integer
/// bit and `d > 0` so the result still fits one integer bit.
pub fn twos_complement_from_two(d: &FixedPoint) -> Result<FixedPoint, FixedPointError> {
    if d.int_bits != 1 {
        return Err(FixedPointError::IntBitsNotOne(d.int_bits));
    }
    if d.is_zero() {
        return Err(FixedPointError::ComplementOverflow);
    }
    let two = BigUint::from(2u32) << d.frac_bits;
    let sig = two - &d.significand;
    Ok(FixedPoint { significand: sig, int_bits: 1, frac_bits: d.frac_bits })
}

/// An iterative factor minus one, in sign-magnitude form. The magnitude keeps
/// the factor's fractional width; only the rectangular multiply consumes it,
/// so the rest of the datapath stays unsigned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedDelta {
    magnitude: FixedPoint,
    negative: bool,
}

impl SignedDelta {
    pub fn new(magnitude: FixedPoint, negative: bool) -> Self {
        let negative = negative && !magnitude.is_zero();
        SignedDelta { magnitude, negative }
    }

    /// `factor - 1` for a factor with one integer bit.
    pub fn from_factor(factor: &FixedPoint) -> Result<Self, FixedPointError> {
        if factor.int_bits != 1 {
            return Err(FixedPointError::IntBitsNotOne(factor.int_bits));
        }
        let one = BigUint::one() << factor.frac_bits;
        let (mag, negative) = if factor.significand >= one {
            (&factor.significand - &one, false)
        } else {
            (&one - &factor.significand, true)
        };
        Ok(SignedDelta {
            magnitude: FixedPoint { significand: mag, int_bits: 0, frac_bits: factor.frac_bits },
            negative,
        })
    }

    pub fn magnitude(&self) -> &FixedPoint {
        &self.magnitude
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn to_rational(&self) -> BigRational {
        let m = self.magnitude.to_rational();
        if self.negative {
            -m
        } else {
            m
        }
    }

    /// The factor this delta came from: `1 + delta`.
    pub fn to_factor(&self) -> Result<FixedPoint, FixedPointError> {
        let one = BigUint::one() << self.magnitude.frac_bits;
        let sig = if self.negative {
            if self.magnitude.significand > one {
                return Err(FixedPointError::Underflow);
            }
            &one - &self.magnitude.significand
        } else {
            &one + &self.magnitude.significand
        };
        FixedPoint::new(sig, 1, self.magnitude.frac_bits)
    }
}

/// The leading-bits-omitted multiply: computes `truncate(n * (1 + delta))`
/// through the multiply-add form `n + n*delta`, which is what a rectangular
/// multiplier evaluates once the `omitted_bits` leading identical fraction
/// bits of the factor are skipped.
///
/// Precondition: `|delta| < 2^-omitted_bits`, i.e. the omitted bits really are
/// all zeros (delta >= 0) or all ones (delta < 0). Bit-exact against
/// `mul_exact` + `truncate_to` on the whole precondition domain.
pub fn rectangular_mul(
    n: &FixedPoint,
    delta: &SignedDelta,
    omitted_bits: u32,
    out_frac_bits: u32,
) -> Result<(FixedPoint, TruncError), FixedPointError> {
    let mag = &delta.magnitude;
    // |delta| < 2^-omitted_bits  <=>  sig < 2^(frac - omitted)
    let limit_bits = mag.frac_bits as i64 - omitted_bits as i64;
    if limit_bits < 0 || mag.significand.bits() > limit_bits as u64 {
        let mag_log2 = if mag.is_zero() {
            f64::NEG_INFINITY
        } else {
            crate::exact::log2_rational(&mag.to_rational())
        };
        return Err(FixedPointError::DeltaTooWide { omitted: omitted_bits, mag_log2 });
    }
    let prod_frac = n.frac_bits + mag.frac_bits;
    let base = &n.significand << mag.frac_bits;
    let prod = &n.significand * &mag.significand;
    let sig = if delta.negative {
        if prod > base {
            return Err(FixedPointError::Underflow);
        }
        base - prod
    } else {
        base + prod
    };
    let full = FixedPoint { significand: sig, int_bits: n.int_bits + 1, frac_bits: prod_frac };
    full.truncate_to(out_frac_bits)
}
