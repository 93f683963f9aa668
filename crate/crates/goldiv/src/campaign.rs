//! Verification campaigns: random, adversarial and exhaustive sweeps of a
//! divider against the exact oracle, with misrounding detection, exact
//! error-range accounting and histogram export.
//!
//! Campaigns are deterministic for a given spec and seed: vectors are drawn
//! from counter-mode streams indexed by chunk, so the thread schedule cannot
//! change any outcome, and all reductions are associative.

use crate::bounds::{total_bound, BoundReport, QRange};
use crate::engine::{Divider, EngineError};
use crate::exact::decimal_string;
use crate::fixedpoint::FixedPoint;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("{0}")]
    Engine(#[from] EngineError),
    #[error("spec: {0}")]
    Spec(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CampaignMode {
    /// Mantissas drawn uniformly over the stage's input width.
    Random,
    /// Divisors from the worst table intervals, dividends driven toward the
    /// failing error sign.
    Adversarial,
    /// Every input pair at the stage's width. Capped at
    /// [`EXHAUSTIVE_MANTISSA_CAP`] fraction bits to stay desk-scale.
    ExhaustiveToy,
}

/// Widest mantissa the exhaustive mode accepts (2^(2*cap) runs).
pub const EXHAUSTIVE_MANTISSA_CAP: u32 = 12;

#[derive(Clone, Debug)]
pub struct CampaignSpec {
    pub vectors: u64,
    pub seed: u64,
    pub mode: CampaignMode,
    /// Stage names to exercise; empty means every configured stage.
    pub stages: Vec<String>,
    /// Histogram bin width in final-stage ulps.
    pub hist_bin_ulp: BigRational,
    /// Stop an adversarial stage early once this many witnesses are in hand
    /// (0 = never stop early).
    pub stop_after_witnesses: usize,
}

impl CampaignSpec {
    pub fn new(vectors: u64, seed: u64, mode: CampaignMode) -> Self {
        CampaignSpec {
            vectors,
            seed,
            mode,
            stages: Vec::new(),
            hist_bin_ulp: BigRational::new(1.into(), 4.into()),
            stop_after_witnesses: 0,
        }
    }
}

/// An input pair that misrounded, with its exact stage error.
#[derive(Clone, Debug)]
pub struct Witness {
    pub index: u64,
    pub a: FixedPoint,
    pub b: FixedPoint,
    pub error_ulp: BigRational,
}

/// Results for one readout stage.
#[derive(Clone, Debug)]
pub struct StageCampaign {
    pub stage_name: String,
    pub mantissa_bits: u32,
    pub vectors_run: u64,
    pub misroundings: u64,
    /// Up to 16 misrounding witnesses, lowest vector index first.
    pub witnesses: Vec<Witness>,
    pub min_error_ulp: Option<BigRational>,
    pub max_error_ulp: Option<BigRational>,
    /// Bin index -> count; a bin covers `[i*w, (i+1)*w)` stage ulps.
    pub histogram: BTreeMap<i64, u64>,
    pub bin_width_ulp: BigRational,
}

#[derive(Debug)]
pub struct CampaignReport {
    pub bound: BoundReport,
    pub stages: Vec<StageCampaign>,
    /// A misrounding surfaced on a stage whose rigorous bound verdict was
    /// not `fail`: the falsification alarm.
    pub alarm: bool,
}

impl CampaignReport {
    pub fn total_misroundings(&self) -> u64 {
        self.stages.iter().map(|s| s.misroundings).sum()
    }
}

/// Exact signed fraction `num / den` with a positive denominator; compares
/// by cross multiplication so no reduction is ever needed.
#[derive(Clone, Debug)]
struct ExactErr {
    num: BigInt,
    den: BigUint,
}

impl ExactErr {
    fn lt(&self, other: &ExactErr) -> bool {
        &self.num * BigInt::from(other.den.clone()) < &other.num * BigInt::from(self.den.clone())
    }

    fn to_rational(&self) -> BigRational {
        BigRational::new(self.num.clone(), BigInt::from(self.den.clone()))
    }
}

/// Accumulator for one chunk of vectors; merge is associative.
#[derive(Debug, Default)]
struct Acc {
    vectors: u64,
    misroundings: u64,
    witnesses: Vec<Witness>,
    min: Option<ExactErr>,
    max: Option<ExactErr>,
    histogram: BTreeMap<i64, u64>,
}

const WITNESS_CAP: usize = 16;

impl Acc {
    fn merge(mut self, other: Acc) -> Acc {
        self.vectors += other.vectors;
        self.misroundings += other.misroundings;
        self.witnesses.extend(other.witnesses);
        self.witnesses.sort_by_key(|w| w.index);
        self.witnesses.truncate(WITNESS_CAP);
        match (&self.min, other.min) {
            (Some(a), Some(b)) => {
                if b.lt(a) {
                    self.min = Some(b);
                }
            }
            (None, b) => self.min = b,
            _ => {}
        }
        match (&self.max, other.max) {
            (Some(a), Some(b)) => {
                if a.lt(&b) {
                    self.max = Some(b);
                }
            }
            (None, b) => self.max = b,
            _ => {}
        }
        for (bin, count) in other.histogram {
            *self.histogram.entry(bin).or_insert(0) += count;
        }
        self
    }
}

fn hist_bin(err: &ExactErr, bin: &(BigInt, BigUint)) -> i64 {
    // floor(err / (bn/bd)) = floor(num*bd / (den*bn)), bn > 0
    let (bn, bd) = bin;
    let num = &err.num * BigInt::from(bd.clone());
    let den = BigInt::from(err.den.clone()) * bn;
    num.div_floor(&den).to_i64().unwrap_or(i64::MAX)
}

/// Evaluates one run at one stage: exact margin test and ulp error, all in
/// integer arithmetic on the significands.
fn stage_error(
    a_norm: &FixedPoint,
    b: &FixedPoint,
    value: &FixedPoint,
    mantissa_bits: u32,
) -> (ExactErr, bool) {
    let nf = value.frac_bits() as i64;
    let ma = a_norm.frac_bits() as i64;
    let mb = b.frac_bits() as i64;
    let n1 = mantissa_bits as i64 + 1;
    // common scale for value*b - a and the margin b*2^-(n+1)
    let s = (nf + mb).max(ma).max(mb + n1);
    let v_sig = BigInt::from(value.significand().clone());
    let b_sig = BigInt::from(b.significand().clone());
    let a_sig = BigInt::from(a_norm.significand().clone());
    let num_err = (&v_sig * &b_sig << (s - nf - mb) as u64) - (a_sig << (s - ma) as u64);
    let margin = &b_sig << (s - mb - n1) as u64;
    let pass = num_err.abs() < margin;
    // err in stage ulps: num_err / (b_sig * 2^(s - mb - nf))
    let den_shift = (s - mb - nf) as u64;
    let err = ExactErr { num: num_err, den: b.significand() << den_shift };
    (err, pass)
}

struct StageDriver<'a> {
    divider: &'a Divider,
    stage_name: String,
    /// Margin precision `n`.
    mantissa_bits: u32,
    /// Operand fraction bits.
    input_bits: u32,
    bin: (BigInt, BigUint),
}

impl<'a> StageDriver<'a> {
    fn run_pair(&self, acc: &mut Acc, index: u64, a_sig: u64, b_sig: u64) -> Result<(), EngineError> {
        let m = self.input_bits;
        let a = FixedPoint::new(BigUint::from(a_sig), 1, m).expect("mantissa fits");
        let b = FixedPoint::new(BigUint::from(b_sig), 1, m).expect("mantissa fits");
        let out = self.divider.divide(&a, &b)?;
        let stage = out.stage(&self.stage_name).expect("stage exists");
        let a_norm = &out.ledger.dividend;
        let (err, pass) = stage_error(a_norm, &b, &stage.value, self.mantissa_bits);
        let bin = hist_bin(&err, &self.bin);
        acc.vectors += 1;
        if !pass {
            acc.misroundings += 1;
            if acc.witnesses.len() < WITNESS_CAP {
                acc.witnesses.push(Witness { index, a, b, error_ulp: err.to_rational() });
            }
        }
        match &acc.min {
            Some(mn) if !err.lt(mn) => {}
            _ => acc.min = Some(err.clone()),
        }
        match &acc.max {
            Some(mx) if !mx.lt(&err) => {}
            _ => acc.max = Some(err),
        }
        *acc.histogram.entry(bin).or_insert(0) += 1;
        Ok(())
    }
}

fn draw_mantissa(rng: &mut ChaCha8Rng, m: u32) -> u64 {
    debug_assert!(m <= 63);
    (1u64 << m) | (rng.next_u64() & ((1u64 << m) - 1))
}

const CHUNK: u64 = 8192;

/// Runs a campaign over the selected stages.
pub fn campaign(divider: &Divider, spec: &CampaignSpec) -> Result<CampaignReport, CampaignError> {
    if spec.hist_bin_ulp <= BigRational::zero() {
        return Err(CampaignError::Spec("histogram bin width must be positive".into()));
    }
    let config = divider.config();
    let stage_names: Vec<String> = if spec.stages.is_empty() {
        config.stages.iter().map(|s| s.name.clone()).collect()
    } else {
        for name in &spec.stages {
            if config.stage(name).is_none() {
                return Err(CampaignError::Spec(format!("unknown stage {name:?}")));
            }
        }
        spec.stages.clone()
    };
    let bound = total_bound(config, divider.table(), &QRange::normalized(), false);

    let mut stages = Vec::new();
    for (stage_idx, name) in stage_names.iter().enumerate() {
        let stage_spec = config.stage(name).unwrap();
        if stage_spec.input_frac_bits > 63 {
            return Err(CampaignError::Spec("input mantissas beyond 63 bits are not supported".into()));
        }
        let driver = StageDriver {
            divider,
            stage_name: name.clone(),
            mantissa_bits: stage_spec.mantissa_bits,
            input_bits: stage_spec.input_frac_bits,
            bin: (spec.hist_bin_ulp.numer().clone(), spec.hist_bin_ulp.denom().magnitude().clone()),
        };
        let acc = match spec.mode {
            CampaignMode::Random => run_random(&driver, spec, stage_idx as u64)?,
            CampaignMode::ExhaustiveToy => run_exhaustive(&driver)?,
            CampaignMode::Adversarial => {
                let negative_side = match bound.stage(name) {
                    Some(s) => {
                        let lo_breach = -&s.rigorous.lo - &s.margin;
                        let hi_breach = &s.rigorous.hi - &s.margin;
                        lo_breach >= hi_breach
                    }
                    None => true,
                };
                run_adversarial(&driver, spec, stage_idx as u64, negative_side)?
            }
        };
        stages.push(StageCampaign {
            stage_name: name.clone(),
            mantissa_bits: stage_spec.mantissa_bits,
            vectors_run: acc.vectors,
            misroundings: acc.misroundings,
            witnesses: acc.witnesses,
            min_error_ulp: acc.min.map(|e| e.to_rational()),
            max_error_ulp: acc.max.map(|e| e.to_rational()),
            histogram: acc.histogram,
            bin_width_ulp: spec.hist_bin_ulp.clone(),
        });
    }

    let alarm = stages.iter().any(|s| {
        s.misroundings > 0
            && bound.stage(&s.stage_name).map(|b| !b.verdict.is_fail()).unwrap_or(true)
    });
    Ok(CampaignReport { bound, stages, alarm })
}

fn run_random(driver: &StageDriver, spec: &CampaignSpec, stage_salt: u64) -> Result<Acc, CampaignError> {
    let n_chunks = spec.vectors.div_ceil(CHUNK);
    let partials: Result<Vec<Acc>, EngineError> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream((stage_salt << 32) | chunk);
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(spec.vectors);
            let mut acc = Acc::default();
            for index in lo..hi {
                let a_sig = draw_mantissa(&mut rng, driver.input_bits);
                let b_sig = draw_mantissa(&mut rng, driver.input_bits);
                driver.run_pair(&mut acc, index, a_sig, b_sig)?;
            }
            Ok(acc)
        })
        .collect();
    Ok(partials?.into_iter().fold(Acc::default(), Acc::merge))
}

fn run_exhaustive(driver: &StageDriver) -> Result<Acc, CampaignError> {
    let m = driver.input_bits;
    if m > EXHAUSTIVE_MANTISSA_CAP {
        return Err(CampaignError::Spec(format!(
            "exhaustive mode is capped at {EXHAUSTIVE_MANTISSA_CAP} mantissa bits, stage has {m}"
        )));
    }
    let count = 1u64 << m;
    let partials: Result<Vec<Acc>, EngineError> = (0..count)
        .into_par_iter()
        .map(|ai| {
            let mut acc = Acc::default();
            let a_sig = (1 << m) | ai;
            for bi in 0..count {
                let b_sig = (1 << m) | bi;
                driver.run_pair(&mut acc, ai * count + bi, a_sig, b_sig)?;
            }
            Ok(acc)
        })
        .collect();
    Ok(partials?.into_iter().fold(Acc::default(), Acc::merge))
}

/// Two-phase adversarial search. Phase one samples divisors inside the worst
/// table intervals and ranks them by the exact quotient coefficient of the
/// final error (divisor-only work); for negative-side stress the sampling
/// sticks to the worst endpoint of each interval and to the intervals whose
/// model-derived reach even permits a margin breach. Phase two sweeps
/// dividends against the strongest divisors, pushing the quotient toward 2
/// and mixing in dense mantissa patterns so the numerator residues pile onto
/// the failing side.
fn run_adversarial(
    driver: &StageDriver,
    spec: &CampaignSpec,
    stage_salt: u64,
    negative_side: bool,
) -> Result<Acc, CampaignError> {
    let m = driver.input_bits;
    let divider = driver.divider;
    let config = divider.config();
    let k = config.iterations;
    let intervals = divider.table().find_worst_divisors(64);
    let n_in = config.table.input_bits();
    let low_bits = m - n_in;
    let ulp = crate::exact::pow2(-(config.final_frac_bits() as i64));
    let stage_spec = config.stage(&driver.stage_name).expect("stage exists");

    // For the negative side only intervals that can reach past the margin at
    // all are worth probing: the reach of an interval is the convergent pull
    // of its own worst initial error plus the guaranteed last-factor pull,
    // against the numerator residues' ceiling. Fall back to every interval
    // when the model says none reaches (the search then just documents the
    // observed extremes).
    let feasible: Vec<&crate::recip::DivisorInterval> = if negative_side {
        let chain0 = crate::bounds::epsilon_chain(&divider.table().max_rel_error(), config);
        let rig = crate::bounds::rigorous_aet(
            config,
            &divider.table().max_rel_error(),
            stage_spec.readout_iteration,
            false,
            &chain0,
            stage_spec.input_frac_bits,
        );
        let h_sup = &rig.n_term / &ulp;
        let margin = crate::exact::pow2(-(stage_spec.mantissa_bits as i64 + 1)) / &ulp;
        let bias = BigRational::from_integer(config.bias_ulps.into());
        let q_hi = BigRational::from_integer(2.into());
        let slack = BigRational::new(1.into(), 4.into());
        let g_target = (h_sup - bias - margin) / q_hi + slack;
        let (f_lo_last, _) = config.f_error_range(k - 1);
        let picked: Vec<&crate::recip::DivisorInterval> = intervals
            .iter()
            .filter(|iv| {
                let eps = iv.local_error.abs();
                if !eps.is_positive() {
                    return false;
                }
                let chain = crate::bounds::epsilon_chain(&eps, config);
                let ep = &chain.eps_prime_bound[k - 1];
                let reach = (-(ep * ep) - &f_lo_last) / &ulp;
                reach <= g_target
            })
            .collect();
        if picked.is_empty() {
            intervals.iter().collect()
        } else {
            picked
        }
    } else {
        intervals.iter().collect()
    };

    // budget split: half for probing divisors (capped), the rest for dividends
    let probe_budget = (spec.vectors / 2).clamp(1, 1 << 17);
    let keep = 32usize.min(probe_budget as usize);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream((stage_salt << 32) | 0xAD);
    let mut candidates: Vec<(BigRational, u64)> = Vec::with_capacity(probe_budget as usize);
    let mut probes = 0u64;
    for i in 0..probe_budget {
        let interval = feasible[(i % feasible.len() as u64) as usize];
        let base: u64 = interval.lo.significand().try_into().expect("table index fits");
        let cell_lo = base << low_bits;
        let cell_hi = cell_lo + (1u64 << low_bits) - 1;
        let b_sig = if negative_side {
            // the initial error is linear and nearly flat across the cell: a
            // 30-bit offset window keeps it within a hair of the extreme
            // while swinging every truncation residue over its full range
            let offset = rng.next_u64() & ((1u64 << low_bits.min(30)) - 1);
            if interval.local_error >= BigRational::zero() {
                cell_lo + offset
            } else {
                cell_hi - offset
            }
        } else {
            // positive-side stress wants large denominator residues, which
            // the exact score finds anywhere in the interval
            cell_lo + (rng.next_u64() & ((1u64 << low_bits) - 1))
        };
        let b = FixedPoint::new(BigUint::from(b_sig), 1, m).expect("mantissa fits");
        let path = divider.denominator_path(&b)?;
        probes += 1;
        let g = path.quotient_coefficient();
        // rank: most negative G first for the negative side, most positive
        // for the positive side
        let score = if negative_side { g } else { -g };
        candidates.push((score, b_sig));
    }
    candidates.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
    candidates.dedup_by_key(|c| c.1);
    candidates.truncate(keep);
    let keep = candidates.len();

    let dividends_total = spec.vectors.saturating_sub(probes).max(1);
    let per_divisor = (dividends_total / keep as u64).max(1);

    // process divisors in order, a parallel batch each; stop between batches
    // once enough witnesses are in hand so reports stay deterministic
    let mut acc = Acc::default();
    acc.vectors = probes;
    for (batch_id, batch) in candidates.chunks(rayon::current_num_threads().max(1)).enumerate() {
        let partials: Result<Vec<Acc>, EngineError> = batch
            .par_iter()
            .enumerate()
            .map(|(j, (_, b_sig))| {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream((stage_salt << 32) | 0xD0 | ((batch_id * 64 + j) as u64) << 8);
                let mut acc = Acc::default();
                let b_sig = *b_sig;
                let lo = 1u64 << m;
                let hi = lo | (lo - 1);
                for v in 0..per_divisor {
                    // near-divisor dividends drive Q toward 2 after the
                    // normalize shift; a wide delta window costs almost no
                    // quotient (2 - 2^-18 at worst) but fully decorrelates
                    // the numerator residues, whose phases otherwise move in
                    // near lockstep because every factor is close to 1
                    let a_sig = match v % 4 {
                        3 => hi - (rng.next_u64() & 0xFFFFF),
                        _ => {
                            let window = 1u64 << (m.saturating_sub(19).min(44));
                            let delta = (rng.next_u64() & (window - 1)) + 1;
                            b_sig.saturating_sub(delta)
                        }
                    };
                    let a_sig = a_sig.clamp(lo, hi);
                    driver.run_pair(&mut acc, v, a_sig, b_sig)?;
                }
                Ok(acc)
            })
            .collect();
        for p in partials? {
            acc = acc.merge(p);
        }
        if spec.stop_after_witnesses > 0 && acc.misroundings >= spec.stop_after_witnesses as u64 {
            break;
        }
    }
    Ok(acc)
}

/// Theoretical density of the approximate accumulative error at a readout,
/// for a representative quotient `q`: the convolution of the uniform
/// residue boxes, shifted by the bias and the last-factor pull. Returned as
/// `(position in stage ulps, density)` samples on a regular grid.
pub fn aaet_density(
    config: &crate::engine::DividerConfig,
    stage_iteration: usize,
    q: f64,
    grid_step_ulp: f64,
) -> Vec<(f64, f64)> {
    let s = stage_iteration;
    let ulp = 2f64.powi(-(config.n_frac_bits[s] as i32));
    let mut boxes: Vec<f64> = Vec::new();
    for i in 0..s {
        boxes.push(q * 2f64.powi(-(config.d_frac_bits[i] as i32)) / ulp);
    }
    for i in 0..=s {
        boxes.push(2f64.powi(-(config.n_frac_bits[i] as i32)) / ulp);
    }
    let (f_lo, f_hi) = config.f_error_range(s - 1);
    let f_lo = f_lo.to_f64().unwrap_or(0.0) / ulp;
    let f_hi = f_hi.to_f64().unwrap_or(0.0) / ulp;
    if f_hi > f_lo {
        boxes.push(q * (f_hi - f_lo));
    }
    // negative boxes: the numerator residues and the factor pull subtract
    let n_boxes = s + 1;
    let mut offset = -q * f_lo;
    if stage_iteration == config.iterations {
        offset += config.bias_ulps as f64;
    }
    for b in &boxes[s..s + n_boxes] {
        offset -= b; // a subtracted U[0,w) box is U[-w,0) plus a shift
    }
    if f_hi > f_lo {
        offset -= q * (f_hi - f_lo);
    }

    // masses on a regular grid; each U[0, w) box becomes a sliding mean over
    // round(w/step) cells (the discretization error is a fraction of a cell)
    let step = grid_step_ulp;
    let total_width: f64 = boxes.iter().sum();
    let len = (total_width / step).ceil() as usize + 2;
    let mut mass = vec![0.0f64; len];
    mass[0] = 1.0;
    let mut offset = offset;
    for w in &boxes {
        let span = ((w / step).round() as usize).max(1);
        // recenter: the discrete box spans (span-1) cells, the real one w
        offset += (w - (span - 1) as f64 * step) / 2.0;
        let mut out = vec![0.0f64; len];
        let mut running = 0.0f64;
        for i in 0..len {
            running += mass[i];
            if i >= span {
                running -= mass[i - span];
            }
            out[i] = running / span as f64;
        }
        mass = out;
    }
    mass.iter()
        .enumerate()
        .map(|(i, m)| (offset + i as f64 * step, m / step))
        .collect()
}

/// Writes the histogram as CSV: exact bin bounds in stage ulps, the count,
/// and the theoretical accumulative density at the bin center (computed for
/// `q_theory`). Bin bounds are exact decimal rationals; only the theory
/// column is floating point.
pub fn report_histogram(
    stage: &StageCampaign,
    config: &crate::engine::DividerConfig,
    q_theory: f64,
    w: &mut dyn Write,
) -> Result<(), CampaignError> {
    let stage_spec = config
        .stage(&stage.stage_name)
        .ok_or_else(|| CampaignError::Spec(format!("unknown stage {:?}", stage.stage_name)))?;
    let s = stage_spec.readout_iteration;
    writeln!(w, "bin_lo_ulp,bin_hi_ulp,count,theory_density")?;
    if stage.histogram.is_empty() {
        return Ok(());
    }
    let bw = &stage.bin_width_ulp;
    let bw_f = bw.to_f64().unwrap_or(0.25);
    let theory = aaet_density(config, s, q_theory, bw_f / 8.0);
    let theory_at = |x: f64| -> f64 {
        theory
            .iter()
            .min_by(|a, b| (a.0 - x).abs().partial_cmp(&(b.0 - x).abs()).unwrap())
            .map(|p| p.1)
            .unwrap_or(0.0)
    };
    for (&bin, &count) in &stage.histogram {
        let lo = BigRational::from_integer(bin.into()) * bw;
        let hi = BigRational::from_integer(BigInt::from(bin) + BigInt::one()) * bw;
        let center = (lo.to_f64().unwrap_or(0.0) + hi.to_f64().unwrap_or(0.0)) / 2.0;
        writeln!(
            w,
            "{},{},{},{:.9}",
            decimal_string(&lo, 6),
            decimal_string(&hi, 6),
            count,
            theory_at(center)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Verdict;
    use crate::presets;

    fn toy_divider() -> Divider {
        Divider::new(presets::toy()).unwrap()
    }

    #[test]
    fn deterministic_reports() {
        let divider = toy_divider();
        let spec = CampaignSpec::new(2000, 42, CampaignMode::Random);
        let r1 = campaign(&divider, &spec).unwrap();
        let r2 = campaign(&divider, &spec).unwrap();
        assert_eq!(r1.stages[0].vectors_run, r2.stages[0].vectors_run);
        assert_eq!(r1.stages[0].misroundings, r2.stages[0].misroundings);
        assert_eq!(r1.stages[0].min_error_ulp, r2.stages[0].min_error_ulp);
        assert_eq!(r1.stages[0].max_error_ulp, r2.stages[0].max_error_ulp);
        assert_eq!(r1.stages[0].histogram, r2.stages[0].histogram);
        // a different seed moves the extremes
        let spec2 = CampaignSpec::new(2000, 43, CampaignMode::Random);
        let r3 = campaign(&divider, &spec2).unwrap();
        assert!(
            r1.stages[0].min_error_ulp != r3.stages[0].min_error_ulp
                || r1.stages[0].max_error_ulp != r3.stages[0].max_error_ulp
        );
    }

    #[test]
    fn toy_random_campaign_is_clean_and_bounded() {
        let divider = toy_divider();
        let spec = CampaignSpec::new(20_000, 7, CampaignMode::Random);
        let report = campaign(&divider, &spec).unwrap();
        assert!(!report.alarm);
        let stage = &report.stages[0];
        assert_eq!(stage.misroundings, 0);
        let bound = report.bound.stage("toy").unwrap();
        assert_eq!(bound.verdict, Verdict::Pass);
        let min = stage.min_error_ulp.as_ref().unwrap();
        let max = stage.max_error_ulp.as_ref().unwrap();
        assert!(min >= &bound.rigorous.lo && max <= &bound.rigorous.hi);
        // histogram counts add up
        let total: u64 = stage.histogram.values().sum();
        assert_eq!(total, stage.vectors_run);
    }

    #[test]
    fn exhaustive_toy_respects_cap() {
        let divider = toy_divider();
        let spec = CampaignSpec::new(0, 0, CampaignMode::ExhaustiveToy);
        let report = campaign(&divider, &spec).unwrap();
        assert_eq!(report.stages[0].vectors_run, 1 << 16);
        assert_eq!(report.stages[0].misroundings, 0);
    }

    #[test]
    fn exhaustive_rejects_wide_mantissas() {
        let mut cfg = presets::toy();
        cfg.stages[0].input_frac_bits = 20;
        let divider = Divider::new(cfg).unwrap();
        let spec = CampaignSpec::new(0, 0, CampaignMode::ExhaustiveToy);
        assert!(matches!(campaign(&divider, &spec), Err(CampaignError::Spec(_))));
    }

    #[test]
    fn histogram_csv_shape() {
        let divider = toy_divider();
        let spec = CampaignSpec::new(5000, 1, CampaignMode::Random);
        let report = campaign(&divider, &spec).unwrap();
        let mut buf = Vec::new();
        report_histogram(&report.stages[0], divider.config(), 1.5, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "bin_lo_ulp,bin_hi_ulp,count,theory_density");
        let data: Vec<&str> = lines.collect();
        assert!(!data.is_empty());
        let total: u64 = data.iter().map(|l| l.split(',').nth(2).unwrap().parse::<u64>().unwrap()).sum();
        assert_eq!(total, report.stages[0].vectors_run);
    }

    #[test]
    fn synthetic_uniform_stream_matches_convolution() {
        // draw the accumulative model directly and compare its histogram
        // against the numeric convolution density
        let cfg = presets::toy();
        let q = 1.5f64;
        let n = 400_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bin = 0.25f64;
        let mut hist: BTreeMap<i64, u64> = BTreeMap::new();
        let d_hi = [2f64.powi(-16), 2f64.powi(-16)];
        let n_hi = [2f64.powi(-16), 2f64.powi(-16), 2f64.powi(-16)];
        let ulp = 2f64.powi(-16);
        let (f_lo, f_hi) = cfg.f_error_range(1);
        let (f_lo, f_hi) = (f_lo.to_f64().unwrap(), f_hi.to_f64().unwrap());
        let unit = |r: &mut ChaCha8Rng| (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        for _ in 0..n {
            let mut t = 0.0;
            for d in d_hi {
                t += q * d * unit(&mut rng);
            }
            for nn in n_hi {
                t -= nn * unit(&mut rng);
            }
            t -= q * (f_lo + (f_hi - f_lo) * unit(&mut rng));
            let bin_idx = (t / ulp / bin).floor() as i64;
            *hist.entry(bin_idx).or_insert(0) += 1;
        }
        let theory = aaet_density(&cfg, 2, q, bin / 8.0);
        // integrate theory per bin and compare counts
        for (&b, &count) in &hist {
            let lo = b as f64 * bin;
            let hi = lo + bin;
            let mass: f64 = theory
                .iter()
                .filter(|(x, _)| *x >= lo && *x < hi)
                .map(|(_, d)| d * bin / 8.0)
                .sum();
            let expect = mass * n as f64;
            let sd = (expect.max(1.0)).sqrt();
            assert!(
                (count as f64 - expect).abs() < 6.0 * sd + 60.0,
                "bin {b}: count {count} vs expected {expect:.1}"
            );
        }
    }
}
