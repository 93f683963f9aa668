//! The iteration engine: runs the multiplicative division loop under a
//! complete per-stage wordlength/truncation configuration and records every
//! truncation error exactly.
//!
//! One run produces the biased approximate quotient at each configured
//! readout stage plus an [`ErrorLedger`] holding the exact numerator,
//! denominator and factor errors of every iteration, the convergence state
//! `1 - D_i`, and enough to rebuild the final value analytically.

use crate::exact::Dyadic;
use crate::fixedpoint::{
    mul_exact, ones_complement_from_two, rectangular_mul, twos_complement_from_two, FixedPoint,
    FixedPointError, SignedDelta,
};
use crate::recip::{BipartiteConfig, RecipError, ReciprocalTable};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("config: {0}")]
    Config(String),
    #[error("table: {0}")]
    Table(#[from] RecipError),
    #[error("datapath: {0}")]
    Datapath(#[from] FixedPointError),
    #[error("operand mantissa must lie in [1, 2), got {0}")]
    OperandOutOfRange(FixedPoint),
    #[error("inputs are not normalized: dividend must lie in [divisor, 2*divisor)")]
    NotNormalized,
}

/// How the iterative factor `2 - D` is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorMode {
    /// Bitwise inversion; introduces exactly one ulp of the denominator width.
    OnesComplement,
    /// Exact subtraction; the factor error is only the optional truncation.
    TwosComplement,
}

/// One readout point of the datapath.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageSpec {
    pub name: String,
    /// Iteration whose numerator this stage reads (1-based, up to `iterations`).
    pub readout_iteration: usize,
    /// Target mantissa bits `n`; the correct-rounding margin is `2^-(n+1)`.
    pub mantissa_bits: u32,
    /// Fraction bits of the operands fed to this stage. Equal to
    /// `mantissa_bits` for the real formats; the toy setups narrow it so
    /// exhaustive enumeration stays cheap.
    pub input_frac_bits: u32,
}

impl StageSpec {
    pub fn new(name: impl Into<String>, readout_iteration: usize, mantissa_bits: u32) -> Self {
        StageSpec {
            name: name.into(),
            readout_iteration,
            mantissa_bits,
            input_frac_bits: mantissa_bits,
        }
    }
}

/// Complete wordlength/truncation/bias parameterization of a divider.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DividerConfig {
    /// Number of iterations `k`; numerators `N_0..N_k` are produced.
    pub iterations: usize,
    /// Fractional bits of `N_0..N_k` (`iterations + 1` entries).
    pub n_frac_bits: Vec<u32>,
    /// Fractional bits of `D_0..D_{k-1}`.
    pub d_frac_bits: Vec<u32>,
    /// Fractional bits kept of each factor `F_0..F_{k-1}` after complementing.
    pub f_frac_bits: Vec<u32>,
    /// Leading identical fraction bits of `F_i` omitted by the rectangular
    /// multiply (0 disables the rectangular path for that iteration).
    pub f_omit_bits: Vec<u32>,
    pub factor_mode: FactorMode,
    /// Bias in final-stage ulps added to every readout of iteration `k`.
    pub bias_ulps: i64,
    pub stages: Vec<StageSpec>,
    pub table: BipartiteConfig,
}

impl DividerConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let k = self.iterations;
        let err = |m: String| Err(EngineError::Config(m));
        if k == 0 {
            return err("at least one iteration is required".into());
        }
        if self.n_frac_bits.len() != k + 1 {
            return err(format!("n_frac_bits needs {} entries, got {}", k + 1, self.n_frac_bits.len()));
        }
        if self.d_frac_bits.len() != k {
            return err(format!("d_frac_bits needs {k} entries, got {}", self.d_frac_bits.len()));
        }
        if self.f_frac_bits.len() != k {
            return err(format!("f_frac_bits needs {k} entries, got {}", self.f_frac_bits.len()));
        }
        if self.f_omit_bits.len() != k {
            return err(format!("f_omit_bits needs {k} entries, got {}", self.f_omit_bits.len()));
        }
        for i in 0..k {
            if self.f_frac_bits[i] > self.d_frac_bits[i] {
                return err(format!(
                    "f_frac_bits[{i}] = {} exceeds d_frac_bits[{i}] = {}; the factor is cut from the denominator",
                    self.f_frac_bits[i], self.d_frac_bits[i]
                ));
            }
            if self.f_omit_bits[i] >= self.f_frac_bits[i] {
                return err(format!("f_omit_bits[{i}] must be below f_frac_bits[{i}]"));
            }
        }
        if self.stages.is_empty() {
            return err("at least one readout stage is required".into());
        }
        for s in &self.stages {
            if s.readout_iteration == 0 || s.readout_iteration > k {
                return err(format!("stage {} reads iteration {}, valid range is 1..={k}", s.name, s.readout_iteration));
            }
            if s.input_frac_bits < self.table.input_bits() {
                return err(format!(
                    "stage {} inputs ({} bits) are narrower than the table input ({} bits)",
                    s.name,
                    s.input_frac_bits,
                    self.table.input_bits()
                ));
            }
        }
        Ok(())
    }

    /// The ulp of the final numerator, as an exponent: `2^-final_frac_bits()`.
    pub fn final_frac_bits(&self) -> u32 {
        self.n_frac_bits[self.iterations]
    }

    /// Error range `[lo, hi]` of the factor error `f_i` implied by the widths
    /// and the complement mode.
    pub fn f_error_range(&self, i: usize) -> (BigRational, BigRational) {
        let d_ulp = crate::exact::pow2(-(self.d_frac_bits[i] as i64));
        let f_cut = crate::exact::pow2(-(self.f_frac_bits[i] as i64));
        match self.factor_mode {
            FactorMode::OnesComplement => (d_ulp, f_cut),
            FactorMode::TwosComplement => (BigRational::from_integer(0.into()), f_cut - d_ulp),
        }
    }

    pub fn stage(&self, name: &str) -> Option<&StageSpec> {
        self.stages.iter().find(|s| s.name == name)
    }
}

/// Exact per-iteration truncation errors and convergence states of one run.
#[derive(Clone, Debug)]
pub struct ErrorLedger {
    /// Normalized dividend (already left-shifted when it was below the divisor).
    pub dividend: FixedPoint,
    pub divisor: FixedPoint,
    pub reciprocal: FixedPoint,
    /// `1 - rec*b`, the initial relative error (sign free).
    pub eps0: Dyadic,
    /// Truncation error of each `N_i`, `iterations + 1` entries.
    pub n_errors: Vec<Dyadic>,
    /// Truncation error of each `D_i`.
    pub d_errors: Vec<Dyadic>,
    /// Total factor error of each `F_i` (complement ulp plus truncation).
    pub f_errors: Vec<Dyadic>,
    /// Convergence state `1 - D_i` after each iteration (sign free at i = 0).
    pub eps_primes: Vec<Dyadic>,
    /// The stored factors `F_0..F_{k-1}`.
    pub factors: Vec<FixedPoint>,
}

impl ErrorLedger {
    /// Exact infinite-precision quotient of the (normalized) inputs.
    pub fn exact_quotient(&self) -> BigRational {
        self.dividend.to_rational() / self.divisor.to_rational()
    }

    /// Rebuilds the final numerator from the ledger alone by expanding the
    /// iteration analytically:
    /// `N_k = A * rec * prod(F) - sum_i n_i * prod(F_j, j >= i)`.
    /// Must equal the simulated final numerator exactly.
    pub fn reconstruct_final(&self) -> BigRational {
        let k = self.f_errors.len();
        let mut value = self.dividend.to_rational() * self.reciprocal.to_rational();
        value = value - self.n_errors[0].to_rational();
        for i in 0..k {
            let f = self.factors[i].to_rational();
            value = value * f - self.n_errors[i + 1].to_rational();
        }
        value
    }

    /// The identity `1 - D_i*F_i = eps'_i^2 + f_i*(1 - eps'_i)`, evaluated
    /// from the ledger for iteration `i`. Both sides exact; returns them for
    /// comparison.
    pub fn convergence_identity(&self, i: usize) -> (BigRational, BigRational) {
        let one = BigRational::one();
        let d_i = &one - self.eps_primes[i].to_rational();
        let f_i = self.factors[i].to_rational();
        let lhs = &one - d_i * f_i;
        let ep = self.eps_primes[i].to_rational();
        let fe = self.f_errors[i].to_rational();
        let rhs = &ep * &ep + fe * (&one - &ep);
        (lhs, rhs)
    }
}

/// One stage's readout value (bias already applied on final-iteration stages).
#[derive(Clone, Debug)]
pub struct StageResult {
    pub name: String,
    pub iteration: usize,
    pub mantissa_bits: u32,
    pub value: FixedPoint,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub stages: Vec<StageResult>,
    pub ledger: ErrorLedger,
}

impl RunOutput {
    pub fn stage(&self, name: &str) -> Option<&StageResult> {
        self.stages.iter().find(|s| s.name == name)
    }
}

/// Fits a freshly computed value to the configured width: narrower targets
/// truncate (with the exact residue), wider targets zero-pad for free. The
/// padding case happens when short input mantissas feed a wide datapath.
fn fit_width(
    v: FixedPoint,
    frac_bits: u32,
) -> Result<(FixedPoint, crate::fixedpoint::TruncError), FixedPointError> {
    if frac_bits >= v.frac_bits() {
        Ok((v.widen_frac(frac_bits), crate::fixedpoint::TruncError::zero()))
    } else {
        v.truncate_to(frac_bits)
    }
}

/// The rectangular multiply with the same wide-target tolerance.
fn fit_rectangular(
    n: &FixedPoint,
    delta: &SignedDelta,
    omit: u32,
    frac_bits: u32,
) -> Result<(FixedPoint, crate::fixedpoint::TruncError), FixedPointError> {
    let prod_frac = n.frac_bits() + delta.magnitude().frac_bits();
    let (v, e) = rectangular_mul(n, delta, omit, frac_bits.min(prod_frac))?;
    Ok((v.widen_frac(frac_bits.max(v.frac_bits())), e))
}

/// A configured divider with its reciprocal table built and measured.
pub struct Divider {
    config: DividerConfig,
    table: ReciprocalTable,
}

impl Divider {
    pub fn new(config: DividerConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let table = crate::recip::build(&config.table)?;
        Ok(Divider { config, table })
    }

    pub fn with_table(config: DividerConfig, table: ReciprocalTable) -> Result<Self, EngineError> {
        config.validate()?;
        if table.config() != &config.table {
            return Err(EngineError::Config("table geometry does not match the config".into()));
        }
        Ok(Divider { config, table })
    }

    pub fn config(&self) -> &DividerConfig {
        &self.config
    }

    pub fn table(&self) -> &ReciprocalTable {
        &self.table
    }

    /// Left-shifts the dividend by one bit when it is below the divisor, so
    /// the infinite-precision quotient always lies in `[1, 2)`.
    pub fn normalize(a: &FixedPoint, b: &FixedPoint) -> Result<(FixedPoint, FixedPoint), EngineError> {
        for m in [a, b] {
            let v = m.to_rational();
            if v < BigRational::one() || v >= BigRational::from_integer(2.into()) {
                return Err(EngineError::OperandOutOfRange(m.clone()));
            }
        }
        if a.cmp_value(b).is_lt() {
            Ok((a.shift_left(1), b.clone()))
        } else {
            Ok((a.clone(), b.clone()))
        }
    }

    /// Normalizes and runs; the usual entry point.
    pub fn divide(&self, a: &FixedPoint, b: &FixedPoint) -> Result<RunOutput, EngineError> {
        let (a, b) = Self::normalize(a, b)?;
        self.run(&a, &b)
    }

    /// Runs the iteration on pre-normalized inputs.
    pub fn run(&self, a: &FixedPoint, b: &FixedPoint) -> Result<RunOutput, EngineError> {
        let rec = self.table.lookup(b)?;
        self.run_with_reciprocal(a, b, &rec)
    }

    /// Runs with an explicit initial reciprocal, bypassing the table. The
    /// reciprocal must carry the table's delivered width.
    pub fn run_with_reciprocal(
        &self,
        a: &FixedPoint,
        b: &FixedPoint,
        rec: &FixedPoint,
    ) -> Result<RunOutput, EngineError> {
        let cfg = &self.config;
        let k = cfg.iterations;
        // dividend in [divisor, 2*divisor) so the exact quotient is in [1, 2)
        let b2 = b.shift_left(1);
        if a.cmp_value(b).is_lt() || a.cmp_value(&b2).is_ge() {
            return Err(EngineError::NotNormalized);
        }

        // eps0 = 1 - rec*b, exact
        let recb = mul_exact(rec, b);
        let eps0 = Dyadic::new(1, 0).sub(&recb.to_dyadic());

        let mut n_errors = Vec::with_capacity(k + 1);
        let mut d_errors = Vec::with_capacity(k);
        let mut f_errors = Vec::with_capacity(k);
        let mut eps_primes = Vec::with_capacity(k);
        let mut factors: Vec<FixedPoint> = Vec::with_capacity(k);
        let mut stage_values: Vec<Option<FixedPoint>> = vec![None; cfg.stages.len()];

        // iteration 0: multiply by the looked-up reciprocal
        let (mut n_cur, n_err) = fit_width(mul_exact(a, rec), cfg.n_frac_bits[0])?;
        n_cur = n_cur.with_int_bits(2)?;
        n_errors.push(n_err.to_dyadic());
        let (mut d_cur, d_err) = fit_width(recb, cfg.d_frac_bits[0])?;
        d_cur = d_cur.with_int_bits(1)?;
        d_errors.push(d_err.to_dyadic());
        eps_primes.push(Dyadic::new(1, 0).sub(&d_cur.to_dyadic()));

        for i in 0..k {
            // factor F_i from D_i
            let (f_full, oc_err) = match cfg.factor_mode {
                FactorMode::OnesComplement => {
                    (ones_complement_from_two(&d_cur)?, Dyadic::new(1, -(cfg.d_frac_bits[i] as i64)))
                }
                FactorMode::TwosComplement => (twos_complement_from_two(&d_cur)?, Dyadic::zero()),
            };
            let (f_cur, f_cut) = f_full.truncate_to(cfg.f_frac_bits[i])?;
            f_errors.push(oc_err.add(&f_cut.to_dyadic()));
            factors.push(f_cur.clone());

            // next numerator (and denominator, unless this was the last factor)
            let omit = cfg.f_omit_bits[i];
            let (n_next, n_err) = if omit > 0 {
                let delta = SignedDelta::from_factor(&f_cur)?;
                fit_rectangular(&n_cur, &delta, omit, cfg.n_frac_bits[i + 1])?
            } else {
                fit_width(mul_exact(&n_cur, &f_cur), cfg.n_frac_bits[i + 1])?
            };
            n_cur = n_next.with_int_bits(2)?;
            n_errors.push(n_err.to_dyadic());

            if i + 1 < k {
                let (d_next, d_err) = if omit > 0 {
                    let delta = SignedDelta::from_factor(&f_cur)?;
                    fit_rectangular(&d_cur, &delta, omit, cfg.d_frac_bits[i + 1])?
                } else {
                    fit_width(mul_exact(&d_cur, &f_cur), cfg.d_frac_bits[i + 1])?
                };
                d_cur = d_next.with_int_bits(1)?;
                d_errors.push(d_err.to_dyadic());
                eps_primes.push(Dyadic::new(1, 0).sub(&d_cur.to_dyadic()));
            }

            // readouts at iteration i+1
            for (idx, spec) in cfg.stages.iter().enumerate() {
                if spec.readout_iteration == i + 1 {
                    let value = if i + 1 == k && cfg.bias_ulps != 0 {
                        n_cur.add_ulps(cfg.bias_ulps)?
                    } else {
                        n_cur.clone()
                    };
                    stage_values[idx] = Some(value);
                }
            }
        }

        let stages = cfg
            .stages
            .iter()
            .zip(stage_values)
            .map(|(spec, value)| StageResult {
                name: spec.name.clone(),
                iteration: spec.readout_iteration,
                mantissa_bits: spec.mantissa_bits,
                value: value.expect("every stage reads a valid iteration"),
            })
            .collect();

        Ok(RunOutput {
            stages,
            ledger: ErrorLedger {
                dividend: a.clone(),
                divisor: b.clone(),
                reciprocal: rec.clone(),
                eps0,
                n_errors,
                d_errors,
                f_errors,
                eps_primes,
                factors,
            },
        })
    }
}

/// Divisor-only view of a run: the denominator/factor sequence and its
/// exact errors. Everything the final error owes to the divisor alone.
#[derive(Clone, Debug)]
pub struct DenominatorPath {
    pub d_errors: Vec<Dyadic>,
    pub f_errors: Vec<Dyadic>,
    pub eps_primes: Vec<Dyadic>,
    pub factors: Vec<FixedPoint>,
}

impl DenominatorPath {
    /// The exact coefficient `G` of the quotient in the final-error
    /// decomposition `error = Q*G - (numerator residues) + bias`:
    /// `G = sum_i d_i * prod(F_j, j > i) - eps'^2 - f_last*(1 - eps')`
    /// with `eps' = eps'_{k-1}`. Negative `G` pulls the error down.
    pub fn quotient_coefficient(&self) -> BigRational {
        let k = self.f_errors.len();
        let one = BigRational::one();
        let mut g = BigRational::from_integer(0.into());
        for i in 0..k {
            let mut term = self.d_errors[i].to_rational();
            for f in &self.factors[i..k] {
                term = term * f.to_rational();
            }
            g = g + term;
        }
        let ep = self.eps_primes[k - 1].to_rational();
        let f_last = self.f_errors[k - 1].to_rational();
        g - &ep * &ep - f_last * (&one - &ep)
    }
}

impl Divider {
    /// Runs only the denominator/factor sequence for a divisor. Cheap probe
    /// used to rank adversarial divisor candidates.
    pub fn denominator_path(&self, b: &FixedPoint) -> Result<DenominatorPath, EngineError> {
        let cfg = &self.config;
        let k = cfg.iterations;
        let rec = self.table.lookup(b)?;
        let mut d_errors = Vec::with_capacity(k);
        let mut f_errors = Vec::with_capacity(k);
        let mut eps_primes = Vec::with_capacity(k);
        let mut factors = Vec::with_capacity(k);
        let (mut d_cur, d_err) = fit_width(mul_exact(&rec, b), cfg.d_frac_bits[0])?;
        d_cur = d_cur.with_int_bits(1)?;
        d_errors.push(d_err.to_dyadic());
        eps_primes.push(Dyadic::new(1, 0).sub(&d_cur.to_dyadic()));
        for i in 0..k {
            let (f_full, oc_err) = match cfg.factor_mode {
                FactorMode::OnesComplement => {
                    (ones_complement_from_two(&d_cur)?, Dyadic::new(1, -(cfg.d_frac_bits[i] as i64)))
                }
                FactorMode::TwosComplement => (twos_complement_from_two(&d_cur)?, Dyadic::zero()),
            };
            let (f_cur, f_cut) = f_full.truncate_to(cfg.f_frac_bits[i])?;
            f_errors.push(oc_err.add(&f_cut.to_dyadic()));
            factors.push(f_cur.clone());
            if i + 1 < k {
                let omit = cfg.f_omit_bits[i];
                let (d_next, d_err) = if omit > 0 {
                    let delta = SignedDelta::from_factor(&f_cur)?;
                    fit_rectangular(&d_cur, &delta, omit, cfg.d_frac_bits[i + 1])?
                } else {
                    fit_width(mul_exact(&d_cur, &f_cur), cfg.d_frac_bits[i + 1])?
                };
                d_cur = d_next.with_int_bits(1)?;
                d_errors.push(d_err.to_dyadic());
                eps_primes.push(Dyadic::new(1, 0).sub(&d_cur.to_dyadic()));
            }
        }
        Ok(DenominatorPath { d_errors, f_errors, eps_primes, factors })
    }
}

/// Convenience for tests: the final-iteration readout minus the bias, i.e.
/// the raw `N_k`, as an exact rational.
pub fn raw_final_numerator(config: &DividerConfig, out: &RunOutput) -> Option<BigRational> {
    let final_stage = out.stages.iter().find(|s| s.iteration == config.iterations)?;
    let bias = crate::exact::dyadic_ratio(
        BigInt::from(config.bias_ulps),
        -(config.final_frac_bits() as i64),
    );
    Some(final_stage.value.to_rational() - bias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::pow2;
    use num_bigint::BigUint;
    use num_traits::{Signed, Zero};
    use proptest::prelude::*;

    pub(crate) fn toy_table_config() -> BipartiteConfig {
        BipartiteConfig {
            n1: 3,
            n2: 3,
            n3: 3,
            large_out_bits: 10,
            small_out_bits: 6,
            sub_bits: 10,
            out_frac_bits: 11,
            implied_leading_bit: true,
        }
    }

    pub(crate) fn toy_config() -> DividerConfig {
        DividerConfig {
            iterations: 2,
            n_frac_bits: vec![16, 16, 16],
            d_frac_bits: vec![16, 16],
            f_frac_bits: vec![10, 16],
            f_omit_bits: vec![4, 8],
            factor_mode: FactorMode::OnesComplement,
            bias_ulps: 0,
            stages: vec![StageSpec::new("toy", 2, 12)],
            table: toy_table_config(),
        }
    }

    fn mantissa(sig: u64, frac: u32) -> FixedPoint {
        FixedPoint::new(BigUint::from(sig), 1, frac).unwrap()
    }

    #[test]
    fn normalize_shifts_small_dividends() {
        let a = FixedPoint::one(4);
        let b = FixedPoint::from_binary_str("1.1000").unwrap();
        let (a2, b2) = Divider::normalize(&a, &b).unwrap();
        assert_eq!(a2.to_rational(), BigRational::from_integer(2.into()));
        assert_eq!(b2, b);
        // already ordered: unchanged
        let (a3, b3) = Divider::normalize(&b, &a).unwrap();
        assert_eq!(a3, b);
        assert_eq!(b3, a);
        // reject out-of-range mantissas
        assert!(Divider::normalize(&FixedPoint::two(4), &b).is_err());
    }

    #[test]
    fn normalize_puts_quotient_in_unit_binade() {
        proptest!(|(asig in 0u64..(1 << 12), bsig in 0u64..(1 << 12))| {
            let a = mantissa((1 << 12) | asig, 12);
            let b = mantissa((1 << 12) | bsig, 12);
            let (a2, b2) = Divider::normalize(&a, &b).unwrap();
            let q = a2.to_rational() / b2.to_rational();
            prop_assert!(q >= BigRational::one());
            prop_assert!(q < BigRational::from_integer(2.into()));
        });
    }

    #[test]
    fn self_division_exact_in_twos_complement_mode() {
        let mut cfg = toy_config();
        cfg.factor_mode = FactorMode::TwosComplement;
        cfg.f_omit_bits = vec![0, 0];
        let divider = Divider::new(cfg).unwrap();
        // a = b = 1.0 with an injected exact reciprocal: every factor is
        // exactly one and the quotient comes out exact
        let a = mantissa(1 << 12, 12);
        let rec = FixedPoint::one(11);
        let out = divider.run_with_reciprocal(&a, &a, &rec).unwrap();
        let q = out.stage("toy").unwrap();
        assert_eq!(q.value.to_rational(), BigRational::one());
        let ledger = &out.ledger;
        assert!(ledger.eps0.is_zero());
        assert!(ledger.n_errors.iter().all(|e| e.is_zero()));
        assert!(ledger.d_errors.iter().all(|e| e.is_zero()));
        assert!(ledger.f_errors.iter().all(|e| e.is_zero()));
    }

    #[test]
    fn ledger_error_ranges_and_reconstruction() {
        let divider = Divider::new(toy_config()).unwrap();
        let cfg = divider.config().clone();
        let mut checked = 0u32;
        for asig in (0u64..(1 << 12)).step_by(293) {
            for bsig in (0u64..(1 << 12)).step_by(377) {
                let a = mantissa((1 << 12) | asig, 12);
                let b = mantissa((1 << 12) | bsig, 12);
                let out = divider.divide(&a, &b).unwrap();
                let ledger = &out.ledger;
                // error ranges
                for (i, n) in ledger.n_errors.iter().enumerate() {
                    let e = n.to_rational();
                    assert!(e >= BigRational::zero() && e < pow2(-(cfg.n_frac_bits[i] as i64)));
                }
                for (i, d) in ledger.d_errors.iter().enumerate() {
                    let e = d.to_rational();
                    assert!(e >= BigRational::zero() && e < pow2(-(cfg.d_frac_bits[i] as i64)));
                }
                for (i, f) in ledger.f_errors.iter().enumerate() {
                    let (lo, hi) = cfg.f_error_range(i);
                    let e = f.to_rational();
                    assert!(e >= lo && e <= hi, "f_{i} out of range: {e}");
                }
                // eps' stays positive after iteration 0 and at least one d-ulp
                for (i, ep) in ledger.eps_primes.iter().enumerate().skip(1) {
                    let e = ep.to_rational();
                    assert!(e >= pow2(-(cfg.d_frac_bits[i] as i64)), "eps'_{i} below the quantization floor");
                }
                // analytical reconstruction is exact
                let rebuilt = ledger.reconstruct_final();
                let simulated = raw_final_numerator(&cfg, &out).unwrap();
                assert_eq!(rebuilt, simulated);
                // convergence identity of the last iteration
                let (lhs, rhs) = ledger.convergence_identity(cfg.iterations - 1);
                assert_eq!(lhs, rhs);
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn bias_is_applied_to_final_readout_only() {
        let mut cfg = toy_config();
        cfg.bias_ulps = 5;
        cfg.stages.push(StageSpec::new("mid", 1, 12));
        let divider = Divider::new(cfg.clone()).unwrap();
        let a = mantissa((1 << 12) | 123, 12);
        let b = mantissa((1 << 12) | 3210, 12);
        let out = divider.divide(&a, &b).unwrap();
        let biased = out.stage("toy").unwrap().value.to_rational();
        let unbiased = raw_final_numerator(&cfg, &out).unwrap();
        assert_eq!(biased - unbiased, BigRational::from_integer(5.into()) * pow2(-16));
        // the mid stage reads iteration 1 without bias; rebuild it from the ledger
        let mid = out.stage("mid").unwrap();
        assert_eq!(mid.iteration, 1);
    }

    #[test]
    fn oversized_omission_is_a_config_error_at_runtime() {
        let mut cfg = toy_config();
        cfg.f_omit_bits = vec![9, 8]; // omitting 9 bits claims |F_0 - 1| < 2^-9
        let divider = Divider::new(cfg).unwrap();
        // inject a reciprocal far off 1/b: the factor delta then violates the
        // claimed leading-bit pattern and the run must refuse
        let a = mantissa((1 << 12) | 4000, 12);
        let b = mantissa((1 << 12) | 3900, 12);
        let rec = FixedPoint::one(11);
        let result = divider.run_with_reciprocal(&a, &b, &rec);
        assert!(matches!(result, Err(EngineError::Datapath(FixedPointError::DeltaTooWide { .. }))));
    }

    #[test]
    fn validation_catches_shape_errors() {
        let mut cfg = toy_config();
        cfg.n_frac_bits = vec![16, 16];
        assert!(Divider::new(cfg).is_err());
        let mut cfg = toy_config();
        cfg.stages[0].readout_iteration = 5;
        assert!(Divider::new(cfg).is_err());
        let mut cfg = toy_config();
        cfg.stages[0].input_frac_bits = 4; // narrower than the table input bits
        assert!(Divider::new(cfg).is_err());
        let mut cfg = toy_config();
        cfg.f_frac_bits = vec![17, 16]; // wider than the denominator
        assert!(Divider::new(cfg).is_err());
    }

    #[test]
    fn ignored_factor_products_stay_within_their_gap() {
        // the plain accumulative expression drops the factor products riding
        // on each residue; the exact run must stay within the algebraic gap
        // (product excess times the residue mass) of it
        let divider = Divider::new(toy_config()).unwrap();
        let cfg = divider.config().clone();
        let k = cfg.iterations;
        for asig in (0u64..(1 << 12)).step_by(449) {
            for bsig in (0u64..(1 << 12)).step_by(521) {
                let a = mantissa((1 << 12) | asig, 12);
                let b = mantissa((1 << 12) | bsig, 12);
                let out = divider.divide(&a, &b).unwrap();
                let ledger = &out.ledger;
                let q = ledger.exact_quotient();
                let one = BigRational::one();

                let err = raw_final_numerator(&cfg, &out).unwrap() - &q;
                let ep_last = ledger.eps_primes[k - 1].to_rational();
                // remove the purely convergent part: what is left is the
                // factor-scaled accumulation
                let aet_actual = &err + &q * &ep_last * &ep_last;

                let d_sum: BigRational = ledger.d_errors.iter().map(|d| d.to_rational()).sum();
                let n_sum: BigRational = ledger.n_errors.iter().map(|n| n.to_rational()).sum();
                let f_last = ledger.f_errors[k - 1].to_rational();
                let plain = &q * &d_sum - &n_sum - &q * &f_last;

                // worst factor-product excess from the run's own factors
                let mut excess = BigRational::one();
                for f in &ledger.factors {
                    excess = excess * (&one + (f.to_rational() - &one).abs());
                }
                let gap = (&excess - &one) * (&q * &d_sum + &n_sum)
                    + &q * &f_last * ep_last.abs();
                assert!(
                    (&aet_actual - &plain).abs() <= gap,
                    "gap exceeded at a={asig} b={bsig}: |{}| > {}",
                    &aet_actual - &plain,
                    gap
                );
            }
        }
    }

    #[test]
    fn eps_prime_matches_denominator_state() {
        let divider = Divider::new(toy_config()).unwrap();
        let a = mantissa((1 << 12) | 2000, 12);
        // sweep divisors across the worst table intervals; every run must
        // satisfy eps'_0 = eps0 + d_0, and at least one must show the
        // denominator actually converging (a large initial error shrinking)
        let mut converged = false;
        for worst in divider.table().find_worst_divisors(8) {
            let lo_sig: u64 = worst.lo.significand().try_into().unwrap();
            for off in 0u64..8 {
                let b = mantissa((lo_sig << 3) | off, 12);
                let out = divider.divide(&a, &b).unwrap();
                let ledger = &out.ledger;
                let lhs = ledger.eps_primes[0].to_rational();
                let rhs = ledger.eps0.to_rational() + ledger.d_errors[0].to_rational();
                assert_eq!(lhs, rhs);
                let e0 = ledger.eps_primes[0].to_rational().abs();
                let e1 = ledger.eps_primes[1].to_rational().abs();
                if e0 > pow2(-10) && e1 < e0 {
                    converged = true;
                }
            }
        }
        assert!(converged, "no divisor showed the denominator converging");
    }
}
