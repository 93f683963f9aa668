//! Bipartite reciprocal lookup tables of configurable geometry, with the
//! exact maximum relative error measured by exhaustive traversal.
//!
//! The table approximates `1/b` for a divisor mantissa `b in [1, 2)` as
//! `large[x1 x2] - small[x1 x3]`, where `x1, x2, x3` are the leading divisor
//! fraction slices of `n1, n2, n3` bits. The large table holds the reciprocal
//! at the center of each `(x1, x2)` block; the small table holds a signed
//! first-order correction `delta / c1^2` evaluated at the `x1` block center,
//! where `delta` is the signed offset of the `x3` slice from the block
//! center. The subtraction runs on a `sub_bits`-wide lane.
//!
//! Because every reciprocal lies in `(1/2, 1]`, the leading fraction bit is
//! constant and need not be stored: with `implied_leading_bit` set, an entry
//! of `large_out_bits` stored bits addresses a grid of
//! `2^-(large_out_bits+1)`, and the small entries share that grid. This is
//! the packing that makes the narrow stored widths worthwhile.
//!
//! Large entries are chosen per block by exact integer minimax over every
//! cell endpoint in the block (the nominal rounded entry is the starting
//! candidate), followed by alternating minimax sweeps over the small
//! entries; refining the output grid therefore never makes the measured
//! error worse. Entry selection, like the error scan, is exhaustive and
//! exact: the reported maximum relative error is both an upper bound over
//! all real divisors and attained (in the limit, for an open upper endpoint)
//! at a recorded witness input.

use crate::exact::dyadic_ratio;
use crate::fixedpoint::FixedPoint;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum RecipError {
    #[error("degenerate geometry: large table must be indexed by at least one bit")]
    DegenerateGeometry,
    #[error("subtractor lane {sub_bits} bits is narrower than the large table output {large_out_bits}")]
    SubtractorTooNarrow { sub_bits: u32, large_out_bits: u32 },
    #[error("delivered output width {out} exceeds the internal grid {grid}")]
    OutputTooWide { out: u32, grid: u32 },
    #[error("geometry too wide: grid + input bits must stay below 58")]
    GeometryTooWide,
    #[error("small table entry {value} does not fit {bits} signed bits")]
    SmallEntryOverflow { value: i64, bits: u32 },
    #[error("large table entry outside the representable range of {bits} stored bits")]
    LargeEntryOverflow { bits: u32 },
    #[error("divisor mantissa must lie in [1, 2)")]
    DivisorOutOfRange,
    #[error("divisor mantissa has {actual} fraction bits, table consumes {needed}")]
    MantissaTooNarrow { actual: u32, needed: u32 },
}

/// Geometry of a bipartite reciprocal table.
///
/// The large table has `2^(n1+n2)` entries of `large_out_bits` stored bits,
/// the small table `2^(n1+n3)` signed entries of `small_out_bits`, joined by
/// a `sub_bits`-wide subtractor lane. `out_frac_bits` is the fractional width
/// of the delivered reciprocal. With `implied_leading_bit`, entries omit the
/// constant leading `1` of `rec in [1/2, 1)` and the grid gains one bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteConfig {
    pub n1: u32,
    pub n2: u32,
    pub n3: u32,
    pub large_out_bits: u32,
    pub small_out_bits: u32,
    pub sub_bits: u32,
    pub out_frac_bits: u32,
    pub implied_leading_bit: bool,
}

impl BipartiteConfig {
    /// Divisor fraction bits consumed by the lookup.
    pub fn input_bits(&self) -> u32 {
        self.n1 + self.n2 + self.n3
    }

    pub fn large_index_bits(&self) -> u32 {
        self.n1 + self.n2
    }

    pub fn small_index_bits(&self) -> u32 {
        self.n1 + self.n3
    }

    /// Fractional bits of the internal grid both tables align to.
    pub fn grid_bits(&self) -> u32 {
        if self.implied_leading_bit {
            self.large_out_bits + 1
        } else {
            self.sub_bits
        }
    }

    fn validate(&self) -> Result<(), RecipError> {
        if self.large_index_bits() == 0 {
            return Err(RecipError::DegenerateGeometry);
        }
        if self.sub_bits < self.large_out_bits {
            return Err(RecipError::SubtractorTooNarrow {
                sub_bits: self.sub_bits,
                large_out_bits: self.large_out_bits,
            });
        }
        if self.out_frac_bits > self.grid_bits() {
            return Err(RecipError::OutputTooWide { out: self.out_frac_bits, grid: self.grid_bits() });
        }
        if self.grid_bits() as u64 + self.input_bits() as u64 + 4 > 62 {
            return Err(RecipError::GeometryTooWide);
        }
        Ok(())
    }
}

/// One input interval of the table together with its exact local worst error.
#[derive(Clone, Debug)]
pub struct DivisorInterval {
    pub cell: u64,
    /// Inclusive lower mantissa bound, at `input_bits` fraction bits.
    pub lo: FixedPoint,
    /// Exclusive upper mantissa bound.
    pub hi: FixedPoint,
    /// Worst signed `1 - rec*b` over the interval (endpoint supremum), exact.
    pub local_error: BigRational,
}

/// A built bipartite table plus its exhaustively measured error profile.
pub struct ReciprocalTable {
    config: BipartiteConfig,
    /// Effective large entries on the internal grid (implied bit included).
    large: Vec<i64>,
    small: Vec<i64>,
    /// Per-cell worst signed error numerator at scale `2^-(out+input_bits)`.
    cell_worst: Vec<i64>,
    max_abs_num: i64,
    max_pos_num: i64,
    max_neg_num: i64,
    witness_cell: u64,
    witness_at_hi: bool,
}

fn round_div(num: u64, den: u64) -> u64 {
    (num + den / 2) / den
}

fn round_div_signed(num: i64, den: i64) -> i64 {
    debug_assert!(den > 0);
    if num >= 0 {
        (num + den / 2) / den
    } else {
        -((-num + den / 2) / den)
    }
}

struct Geometry {
    n1: u32,
    n2: u32,
    n3: u32,
    n: u32,
    grid: u32,
    out: u32,
    drop: u32,
    /// Large entries on the grid move in units of `2^large_shift`.
    large_shift: u32,
    large_lo: i64,
    large_hi: i64, // exclusive
    small_limit: i64,
}

impl Geometry {
    fn of(config: &BipartiteConfig) -> Geometry {
        let grid = config.grid_bits();
        let (large_shift, large_lo, large_hi) = if config.implied_leading_bit {
            (0, 1i64 << (grid - 1), 1i64 << grid)
        } else {
            let shift = config.sub_bits - config.large_out_bits;
            (shift, 0, (1i64 << config.large_out_bits) << shift)
        };
        Geometry {
            n1: config.n1,
            n2: config.n2,
            n3: config.n3,
            n: config.input_bits(),
            grid,
            out: config.out_frac_bits,
            drop: grid - config.out_frac_bits,
            large_shift,
            large_lo,
            large_hi,
            small_limit: 1i64 << (config.small_out_bits.saturating_sub(1)),
        }
    }

    fn delivered(&self, l_eff: i64, s: i64) -> i64 {
        (l_eff - s) >> self.drop
    }

    /// Signed error numerator `2^(out+n) - rec*y_num` for one cell endpoint.
    fn err_at(&self, rec_del: i64, y_num: i64) -> i64 {
        (1i64 << (self.out + self.n)) - rec_del * y_num
    }
}

/// Builds the table and measures its exact worst-case relative error by
/// traversing every input interval. Entry fitting parallelizes over large
/// blocks and merges by max reduction.
pub fn build(config: &BipartiteConfig) -> Result<ReciprocalTable, RecipError> {
    config.validate()?;
    let g = Geometry::of(config);

    let small = fit_small_nominal(config, &g)?;
    let large = fit_large_minimax(config, &g, &small)?;
    let mut table = ReciprocalTable {
        config: config.clone(),
        large,
        small,
        cell_worst: Vec::new(),
        max_abs_num: 0,
        max_pos_num: 0,
        max_neg_num: 0,
        witness_cell: 0,
        witness_at_hi: false,
    };
    // alternate small/large minimax sweeps until the profile stops improving
    for _ in 0..8 {
        let improved_s = refit_small_minimax(&mut table, &g)?;
        let large = fit_large_minimax(&table.config, &g, &table.small)?;
        let improved_l = large != table.large;
        table.large = large;
        if !improved_s && !improved_l {
            break;
        }
    }
    table.rescan(&g);
    polish_worst_cells(&mut table, &g)?;
    Ok(table)
}

/// Small entries: nearest-rounded slope correction `delta / c1^2`.
fn fit_small_nominal(config: &BipartiteConfig, g: &Geometry) -> Result<Vec<i64>, RecipError> {
    let mut small = vec![0i64; 1usize << (g.n1 + g.n3)];
    for x1 in 0u64..(1 << g.n1) {
        // c1 = 1 + x1*2^-n1 + 2^-(n1+1), numerator at scale 2^(n1+1)
        let c1_num = (1i64 << (g.n1 + 1)) + 2 * x1 as i64 + 1;
        let den = c1_num * c1_num; // scale 2^(2n1+2)
        for x3 in 0u64..(1 << g.n3) {
            // delta = (2*x3 + 1 - 2^n3) * 2^-(n+1)
            let delta_num = 2 * x3 as i64 + 1 - (1i64 << g.n3);
            // S = delta/c1^2 on the grid: delta_num * 2^(2n1+2+grid) / (2^(n+1) * den)
            let shift = 2 * g.n1 as i64 + 2 + g.grid as i64 - (g.n as i64 + 1);
            let (num, den2) = if shift >= 0 { (delta_num << shift, den) } else { (delta_num, den << (-shift)) };
            let s = round_div_signed(num, den2);
            if s.abs() >= g.small_limit && config.small_out_bits < 63 {
                return Err(RecipError::SmallEntryOverflow { value: s, bits: config.small_out_bits });
            }
            small[((x1 << g.n3) | x3) as usize] = s;
        }
    }
    Ok(small)
}

/// Large entries: exact per-block integer minimax given the small table.
fn fit_large_minimax(config: &BipartiteConfig, g: &Geometry, small: &[i64]) -> Result<Vec<i64>, RecipError> {
    let blocks = 1u64 << (g.n1 + g.n2);
    let per_block: Result<Vec<i64>, RecipError> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let x1 = b >> g.n2;
            let step = 1i64 << g.large_shift;
            // nominal: the stored-width rounding of 1/c12, c12 the block center
            let c12_num = (1u64 << (g.n1 + g.n2 + 1)) + 2 * b + 1; // scale 2^(n1+n2+1)
            let nominal =
                (round_div(1u64 << (g.grid - g.large_shift + g.n1 + g.n2 + 1), c12_num) as i64) << g.large_shift;

            let eval_block = |l: i64| -> i64 {
                let mut worst = 0i64;
                for x3 in 0u64..(1 << g.n3) {
                    let s = small[((x1 << g.n3) | x3) as usize];
                    let rec_del = g.delivered(l, s);
                    let c = ((b << g.n3) | x3) as i64;
                    let y_lo = (1i64 << g.n) + c;
                    worst = worst.max(g.err_at(rec_del, y_lo).abs());
                    worst = worst.max(g.err_at(rec_del, y_lo + 1).abs());
                }
                worst
            };

            // widen the candidate window until the optimum is interior
            let mut radius = 4i64;
            let (mut best_l, mut best_cost) = (nominal, eval_block(nominal));
            loop {
                for k in -radius..=radius {
                    let l = nominal + k * step;
                    if l < g.large_lo || l >= g.large_hi {
                        continue;
                    }
                    let cost = eval_block(l);
                    if cost < best_cost
                        || (cost == best_cost && (l - nominal).abs() < (best_l - nominal).abs())
                    {
                        best_l = l;
                        best_cost = cost;
                    }
                }
                if best_l > nominal - radius * step && best_l < nominal + radius * step {
                    break;
                }
                radius *= 2;
                if radius > 1 << 20 {
                    break; // pathological geometry; accept the best found
                }
            }
            if best_l < g.large_lo || best_l >= g.large_hi {
                return Err(RecipError::LargeEntryOverflow { bits: config.large_out_bits });
            }
            Ok(best_l)
        })
        .collect();
    per_block
}

/// Small entries: per-(x1,x3) minimax sweep given the large table. Returns
/// whether anything changed.
fn refit_small_minimax(table: &mut ReciprocalTable, g: &Geometry) -> Result<bool, RecipError> {
    let large = &table.large;
    let n2 = g.n2;
    let updated: Vec<i64> = (0..table.small.len() as u64)
        .into_par_iter()
        .map(|idx| {
            let x1 = idx >> g.n3;
            let x3 = idx & ((1 << g.n3) - 1);
            let current = table.small[idx as usize];
            let eval = |s: i64| -> i64 {
                let mut worst = 0i64;
                for x2 in 0u64..(1 << n2) {
                    let b = (x1 << n2) | x2;
                    let rec_del = g.delivered(large[b as usize], s);
                    let c = ((b << g.n3) | x3) as i64;
                    let y_lo = (1i64 << g.n) + c;
                    worst = worst.max(g.err_at(rec_del, y_lo).abs());
                    worst = worst.max(g.err_at(rec_del, y_lo + 1).abs());
                }
                worst
            };
            let mut best = (current, eval(current));
            for s in (current - 4)..=(current + 4) {
                if s == current || s.abs() >= g.small_limit {
                    continue;
                }
                let cost = eval(s);
                if cost < best.1 || (cost == best.1 && (s - current).abs() < (best.0 - current).abs()) {
                    best = (s, cost);
                }
            }
            best.0
        })
        .collect();
    let changed = updated != table.small;
    table.small = updated;
    Ok(changed)
}

/// Joint polish: the coordinate sweeps stop at points where moving a small
/// entry helps only together with a refit of its whole large column. Nudge
/// the small entry under the current worst cell and refit that column's
/// large entries; keep the move when the global maximum drops.
fn polish_worst_cells(table: &mut ReciprocalTable, g: &Geometry) -> Result<(), RecipError> {
    for _ in 0..64 {
        let worst_cell = table.witness_cell;
        let x1 = worst_cell >> (g.n2 + g.n3);
        let x3 = worst_cell & ((1 << g.n3) - 1);
        let s_idx = ((x1 << g.n3) | x3) as usize;
        let current_max = table.max_abs_num;
        let mut accepted = false;
        for ds in [-1i64, 1, -2, 2] {
            let s_new = table.small[s_idx] + ds;
            if s_new.abs() >= g.small_limit {
                continue;
            }
            let mut cand = ReciprocalTable {
                config: table.config.clone(),
                large: table.large.clone(),
                small: table.small.clone(),
                cell_worst: Vec::new(),
                max_abs_num: 0,
                max_pos_num: 0,
                max_neg_num: 0,
                witness_cell: 0,
                witness_at_hi: false,
            };
            cand.small[s_idx] = s_new;
            let refit = fit_large_minimax(&cand.config, g, &cand.small)?;
            cand.large = refit;
            cand.rescan(g);
            if cand.max_abs_num < current_max {
                *table = cand;
                accepted = true;
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    Ok(())
}

impl ReciprocalTable {
    fn rescan(&mut self, g: &Geometry) {
        let n3 = g.n3;
        self.cell_worst = (0..(1u64 << g.n))
            .into_par_iter()
            .map(|cell| {
                let b = cell >> n3;
                let x1 = b >> g.n2;
                let x3 = cell & ((1 << n3) - 1);
                let s = self.small[((x1 << n3) | x3) as usize];
                let rec_del = g.delivered(self.large[b as usize], s);
                let y_lo = (1i64 << g.n) + cell as i64;
                let e_lo = g.err_at(rec_del, y_lo);
                let e_hi = g.err_at(rec_del, y_lo + 1);
                if e_lo.abs() >= e_hi.abs() {
                    e_lo
                } else {
                    e_hi
                }
            })
            .collect();
        let mut max_abs = 0i64;
        let mut max_pos = 0i64;
        let mut max_neg = 0i64;
        let mut witness = 0u64;
        for (cell, &e) in self.cell_worst.iter().enumerate() {
            if e > max_pos {
                max_pos = e;
            }
            if e < max_neg {
                max_neg = e;
            }
            if e.abs() > max_abs {
                max_abs = e.abs();
                witness = cell as u64;
            }
        }
        self.max_abs_num = max_abs;
        self.max_pos_num = max_pos;
        self.max_neg_num = max_neg;
        self.witness_cell = witness;
        let (e_lo, e_hi) = self.cell_endpoint_errors(witness);
        self.witness_at_hi = e_hi.abs() > e_lo.abs();
    }

    fn geometry(&self) -> Geometry {
        Geometry::of(&self.config)
    }

    fn err_scale(&self) -> i64 {
        -((self.config.out_frac_bits + self.config.input_bits()) as i64)
    }

    fn cell_endpoint_errors(&self, cell: u64) -> (i64, i64) {
        let g = self.geometry();
        let b = cell >> g.n3;
        let x1 = b >> g.n2;
        let x3 = cell & ((1 << g.n3) - 1);
        let s = self.small[((x1 << g.n3) | x3) as usize];
        let rec_del = g.delivered(self.large[b as usize], s);
        let y_lo = (1i64 << g.n) + cell as i64;
        (g.err_at(rec_del, y_lo), g.err_at(rec_del, y_lo + 1))
    }

    pub fn config(&self) -> &BipartiteConfig {
        &self.config
    }

    /// Large entries in stored form (implied leading bit and grid alignment
    /// removed).
    pub fn stored_large_entries(&self) -> Vec<u64> {
        let g = self.geometry();
        let offset = if self.config.implied_leading_bit { g.large_lo } else { 0 };
        self.large.iter().map(|&l| ((l - offset) >> g.large_shift) as u64).collect()
    }

    pub fn small_entries(&self) -> &[i64] {
        &self.small
    }

    /// Largest `|1 - rec*b|` over every real divisor in `[1, 2)`, exact.
    pub fn max_rel_error(&self) -> BigRational {
        dyadic_ratio(self.max_abs_num, self.err_scale())
    }

    /// The two signed extremes of the scan: `(most negative, most positive)`.
    pub fn signed_extremes(&self) -> (BigRational, BigRational) {
        (
            dyadic_ratio(self.max_neg_num, self.err_scale()),
            dyadic_ratio(self.max_pos_num, self.err_scale()),
        )
    }

    /// A divisor mantissa attaining the maximum relative error (in the limit
    /// for an upper-endpoint witness), at `input_bits` fraction bits.
    pub fn achieving_input(&self) -> FixedPoint {
        let n = self.config.input_bits();
        let sig = (BigUint::one() << n)
            + BigUint::from(self.witness_cell)
            + BigUint::from(self.witness_at_hi as u32);
        FixedPoint::new(sig, 2, n).unwrap()
    }

    /// Looks up the delivered reciprocal for a divisor mantissa in `[1, 2)`.
    pub fn lookup(&self, b: &FixedPoint) -> Result<FixedPoint, RecipError> {
        let m = b.frac_bits();
        let n = self.config.input_bits();
        if m < n {
            return Err(RecipError::MantissaTooNarrow { actual: m, needed: n });
        }
        let sig = b.significand();
        let one = BigUint::one() << m;
        if sig < &one || sig >= &(BigUint::from(2u32) << m) {
            return Err(RecipError::DivisorOutOfRange);
        }
        let frac = sig - &one;
        let cell: u64 = (&frac >> (m - n)).try_into().expect("cell index fits u64");
        Ok(self.rec_for_cell(cell))
    }

    fn rec_for_cell(&self, cell: u64) -> FixedPoint {
        let g = self.geometry();
        let b = cell >> g.n3;
        let x1 = b >> g.n2;
        let x3 = cell & ((1 << g.n3) - 1);
        let s = self.small[((x1 << g.n3) | x3) as usize];
        let rec_del = g.delivered(self.large[b as usize], s);
        debug_assert!(rec_del >= 0);
        FixedPoint::new(BigUint::from(rec_del as u64), 1, self.config.out_frac_bits).unwrap()
    }

    /// The `count` input intervals with the largest local error, descending.
    pub fn find_worst_divisors(&self, count: usize) -> Vec<DivisorInterval> {
        let mut order: Vec<u64> = (0..self.cell_worst.len() as u64).collect();
        order.sort_by_key(|&c| std::cmp::Reverse(self.cell_worst[c as usize].abs()));
        order.truncate(count);
        let n = self.config.input_bits();
        let scale = self.err_scale();
        order
            .into_iter()
            .map(|cell| {
                let lo_sig = (BigUint::one() << n) + BigUint::from(cell);
                let hi_sig = &lo_sig + BigUint::one();
                DivisorInterval {
                    cell,
                    lo: FixedPoint::new(lo_sig, 2, n).unwrap(),
                    hi: FixedPoint::new(hi_sig, 2, n).unwrap(),
                    local_error: dyadic_ratio(self.cell_worst[cell as usize], scale),
                }
            })
            .collect()
    }

    /// Raw entry dump: header ("BPRT", version, geometry, implied-bit flag),
    /// then the stored large entries as u64 little-endian, then the small
    /// entries as i64 little-endian.
    pub fn dump_entries(&self, w: &mut dyn std::io::Write) -> std::io::Result<()> {
        w.write_all(b"BPRT")?;
        w.write_all(&1u32.to_le_bytes())?;
        for v in [
            self.config.n1,
            self.config.n2,
            self.config.n3,
            self.config.large_out_bits,
            self.config.small_out_bits,
            self.config.sub_bits,
            self.config.out_frac_bits,
            self.config.implied_leading_bit as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for l in self.stored_large_entries() {
            w.write_all(&l.to_le_bytes())?;
        }
        for &s in &self.small {
            w.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Searches every slice partition `(n1, n2, n3)` compatible with the given
/// index widths and returns the build with the smallest measured error.
pub fn search_partitions(
    large_index_bits: u32,
    large_out_bits: u32,
    small_index_bits: u32,
    small_out_bits: u32,
    sub_bits: u32,
    implied_leading_bit: bool,
) -> Result<ReciprocalTable, RecipError> {
    let mut best: Option<ReciprocalTable> = None;
    for n1 in 0..=large_index_bits.min(small_index_bits) {
        let config = BipartiteConfig {
            n1,
            n2: large_index_bits - n1,
            n3: small_index_bits - n1,
            large_out_bits,
            small_out_bits,
            sub_bits,
            out_frac_bits: if implied_leading_bit { large_out_bits + 1 } else { sub_bits },
            implied_leading_bit,
        };
        if config.validate().is_err() {
            continue;
        }
        let table = match build(&config) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let better = match &best {
            None => true,
            Some(b) => table.max_rel_error() < b.max_rel_error(),
        };
        if better {
            best = Some(table);
        }
    }
    best.ok_or(RecipError::DegenerateGeometry)
}

/// Helper for tests and reports: `1 - rec*b` for an exact mantissa.
pub fn relative_error(table: &ReciprocalTable, b: &FixedPoint) -> Result<BigRational, RecipError> {
    let rec = table.lookup(b)?;
    Ok(BigRational::from_integer(BigInt::one()) - rec.to_rational() * b.to_rational())
}
