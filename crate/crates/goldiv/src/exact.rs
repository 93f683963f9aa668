//! Exact dyadic and rational helpers shared by the whole crate.
//!
//! Every error quantity in the workbench is either dyadic (an integer times a
//! power of two) or a ratio of a dyadic by the divisor significand, so the
//! bookkeeping here never rounds. Floating point appears only in the
//! presentation helpers (`log2_rational`, decimal rendering), never in a bound.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact value `num * 2^exp`. Cheap to build (no gcd), cheap to compare.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dyadic {
    pub num: BigInt,
    pub exp: i64,
}

impl Dyadic {
    pub fn new(num: impl Into<BigInt>, exp: i64) -> Self {
        Dyadic { num: num.into(), exp }
    }

    pub fn zero() -> Self {
        Dyadic { num: BigInt::zero(), exp: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn neg(&self) -> Self {
        Dyadic { num: -self.num.clone(), exp: self.exp }
    }

    pub fn to_rational(&self) -> BigRational {
        dyadic_ratio(self.num.clone(), self.exp)
    }

    /// Aligns two dyadics to a common exponent and returns the significands.
    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, i64) {
        let exp = self.exp.min(other.exp);
        let a = &self.num << u64::try_from(self.exp - exp).unwrap();
        let b = &other.num << u64::try_from(other.exp - exp).unwrap();
        (a, b, exp)
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        let (a, b, exp) = self.aligned(other);
        Dyadic { num: a + b, exp }
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        let (a, b, exp) = self.aligned(other);
        Dyadic { num: a - b, exp }
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic { num: &self.num * &other.num, exp: self.exp + other.exp }
    }

    pub fn cmp_value(&self, other: &Dyadic) -> std::cmp::Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic { num: self.num.abs(), exp: self.exp }
    }
}

/// `2^exp` as an exact rational, for any sign of `exp`.
pub fn pow2(exp: i64) -> BigRational {
    if exp >= 0 {
        BigRational::from_integer(BigInt::one() << exp as u64)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-exp) as u64)
    }
}

/// `num * 2^exp` as an exact rational.
pub fn dyadic_ratio(num: impl Into<BigInt>, exp: i64) -> BigRational {
    let num = num.into();
    if exp >= 0 {
        BigRational::from_integer(num << exp as u64)
    } else {
        BigRational::new(num, BigInt::one() << (-exp) as u64)
    }
}

/// The exact rational equal to a finite `f64`.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// `2^e` for fractional `e`, materialized exactly from the f64 evaluation.
/// The f64 step is the only approximation; everything downstream is exact.
pub fn pow2_f64(e: f64) -> BigRational {
    rational_from_f64(e.exp2())
}

/// log2 of a positive rational, accurate to ~1e-15. Presentation only.
pub fn log2_rational(r: &BigRational) -> f64 {
    assert!(r.is_positive(), "log2 of non-positive rational");
    log2_biguint(r.numer().magnitude()) - log2_biguint(r.denom().magnitude())
}

fn log2_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 53 {
        let v: u64 = n.try_into().unwrap();
        return (v as f64).log2();
    }
    // Keep the top 53 bits for the mantissa, add back the shift.
    let shift = bits - 53;
    let top: u64 = (n >> shift).try_into().unwrap();
    (top as f64).log2() + shift as f64
}

/// Signed log2 magnitude, returns None for zero.
pub fn log2_abs(r: &BigRational) -> Option<f64> {
    if r.is_zero() {
        None
    } else {
        Some(log2_rational(&r.abs()))
    }
}

/// Renders a rational as a correctly rounded decimal string with `places`
/// fractional digits (round half away from zero).
pub fn decimal_string(r: &BigRational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = r * BigRational::from_integer(scale.clone());
    // round half away from zero
    let two = BigInt::from(2);
    let (num, den) = (scaled.numer().clone(), scaled.denom().clone());
    let doubled = num * &two;
    let q = &doubled / &den;
    let rounded: BigInt = if q.is_negative() { (q - 1) / &two } else { (q + 1) / &two };
    let neg = rounded.is_negative();
    let digits = rounded.magnitude().to_string();
    let digits = if digits.len() <= places as usize {
        format!("{}{}", "0".repeat(places as usize + 1 - digits.len()), digits)
    } else {
        digits
    };
    let split = digits.len() - places as usize;
    let (int_part, frac_part) = digits.split_at(split);
    let sign = if neg { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

/// Renders a rational as the exact fraction "p/q" (or "p" when integral).
pub fn fraction_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses a plain decimal literal ("5", "-0.25", "1.75") into an exact rational.
pub fn rational_from_decimal_str(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (Sign::Minus, rest),
        None => (Sign::Plus, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigUint = digits.parse().ok()?;
    let den = BigUint::from(10u32).pow(frac_part.len() as u32);
    let num = BigInt::from_biguint(sign, num);
    Some(BigRational::new(num, BigInt::from(den)))
}
