//! The two shipped divider configurations and the toy setup used by the
//! exhaustive suites.
//!
//! Both real presets keep a uniform datapath ulp of `2^-67` (three guard
//! bits under the 64-bit extended-precision readout) and serve three readout
//! precisions from one datapath. Factor widths follow the convergence chain:
//! roughly twice the current error exponent plus three bits, with the
//! leading identical factor bits omitted by the rectangular multiply.

use crate::engine::{DividerConfig, FactorMode, StageSpec};
use crate::recip::BipartiteConfig;

fn stage(name: &str, readout_iteration: usize, mantissa_bits: u32) -> StageSpec {
    StageSpec::new(name, readout_iteration, mantissa_bits)
}

/// Reciprocal table geometry used by the three-iteration divider: a large
/// table of 2^9 x 14, a small table of 2^10 x 6 and a 14-bit subtractor,
/// entries packed with the implied leading bit.
pub fn three_stage_table() -> BipartiteConfig {
    BipartiteConfig {
        n1: 5,
        n2: 4,
        n3: 5,
        large_out_bits: 14,
        small_out_bits: 6,
        sub_bits: 14,
        out_frac_bits: 15,
        implied_leading_bit: true,
    }
}

/// Reciprocal table geometry used by the two-iteration divider: a large
/// table of 2^11 x 17, a small table of 2^12 x 7 and a 17-bit subtractor.
pub fn two_stage_table() -> BipartiteConfig {
    BipartiteConfig {
        n1: 6,
        n2: 5,
        n3: 6,
        large_out_bits: 17,
        small_out_bits: 7,
        sub_bits: 17,
        out_frac_bits: 18,
        implied_leading_bit: true,
    }
}

/// Three-iteration divider: SP after iteration 1, DP after 2, EP after 3.
/// Uniform 67 fractional bits on every numerator and denominator; factors
/// keep 30 and 57 fractional bits (three extra over the doubled error
/// exponent) and the last factor stays at full width.
pub fn three_stage() -> DividerConfig {
    DividerConfig {
        iterations: 3,
        n_frac_bits: vec![67, 67, 67, 67],
        d_frac_bits: vec![67, 67, 67],
        f_frac_bits: vec![30, 57, 67],
        f_omit_bits: vec![13, 27, 54],
        factor_mode: FactorMode::OnesComplement,
        bias_ulps: 0,
        stages: vec![stage("sp", 1, 23), stage("dp", 2, 52), stage("ep", 3, 63)],
        table: three_stage_table(),
    }
}

/// Three-iteration divider with one bit less on `N_0` (keeps the multiplier
/// width flat when a negative initial error pushes `N_0` past 2).
pub fn three_stage_n0_reduced() -> DividerConfig {
    let mut cfg = three_stage();
    cfg.n_frac_bits[0] = 66;
    cfg
}

/// Negative example: the uniform ulp weakened to `2^-66`. The extended
/// precision margin is then four ulps against an accumulative span of ten.
pub fn three_stage_ulp66() -> DividerConfig {
    let mut cfg = three_stage();
    cfg.n_frac_bits = vec![66, 66, 66, 66];
    cfg.d_frac_bits = vec![66, 66, 66];
    cfg.f_frac_bits = vec![30, 57, 66];
    cfg
}

/// Negative example: `F_1` kept at 56 instead of 57 fractional bits; the
/// convergent error after iteration 2 then breaks the DP margin.
pub fn three_stage_f1_reduced() -> DividerConfig {
    let mut cfg = three_stage();
    cfg.f_frac_bits[1] = 56;
    cfg.f_omit_bits[2] = 53;
    cfg
}

/// Two-iteration divider: SP after iteration 1, DP and EP after iteration 2.
/// `N_0` is one bit narrower and a `+5` ulp bias recenters the accumulative
/// interval; factors keep 35 fractional bits, the last one full width.
pub fn two_stage() -> DividerConfig {
    DividerConfig {
        iterations: 2,
        n_frac_bits: vec![66, 67, 67],
        d_frac_bits: vec![67, 67],
        f_frac_bits: vec![35, 67],
        f_omit_bits: vec![16, 32],
        factor_mode: FactorMode::OnesComplement,
        bias_ulps: 5,
        stages: vec![stage("sp", 1, 23), stage("dp", 2, 52), stage("ep", 2, 63)],
        table: two_stage_table(),
    }
}

/// Negative example: `F_0` with one extra bit only (34 fractional bits);
/// the convergent error then exceeds the redundancy left by the bias.
pub fn two_stage_f0_reduced() -> DividerConfig {
    let mut cfg = two_stage();
    cfg.f_frac_bits[0] = 34;
    cfg
}

/// Positive variant: the last factor shortened by one more bit, doubling
/// the reach of its error.
pub fn two_stage_flast_reduced() -> DividerConfig {
    let mut cfg = two_stage();
    cfg.f_frac_bits[1] = 66;
    cfg
}

/// Toy divider for exhaustive verification: 8-bit input mantissas, a
/// `2^-16` datapath ulp, two iterations, a small bipartite table and a
/// 12-bit readout precision (margin `2^-13`, eight final ulps).
pub fn toy() -> DividerConfig {
    let mut readout = stage("toy", 2, 12);
    readout.input_frac_bits = 8;
    DividerConfig {
        iterations: 2,
        n_frac_bits: vec![16, 16, 16],
        d_frac_bits: vec![16, 16],
        f_frac_bits: vec![10, 16],
        f_omit_bits: vec![4, 8],
        factor_mode: FactorMode::OnesComplement,
        bias_ulps: 0,
        stages: vec![readout],
        table: BipartiteConfig {
            n1: 3,
            n2: 3,
            n3: 2,
            large_out_bits: 10,
            small_out_bits: 6,
            sub_bits: 10,
            out_frac_bits: 11,
            implied_leading_bit: true,
        },
    }
}

/// Looks a preset up by name.
pub fn by_name(name: &str) -> Option<DividerConfig> {
    match name {
        "threestage" => Some(three_stage()),
        "threestage-n0" => Some(three_stage_n0_reduced()),
        "threestage-ulp66" => Some(three_stage_ulp66()),
        "threestage-f1-56" => Some(three_stage_f1_reduced()),
        "twostage" => Some(two_stage()),
        "twostage-f0-34" => Some(two_stage_f0_reduced()),
        "twostage-flast-66" => Some(two_stage_flast_reduced()),
        "toy" => Some(toy()),
        _ => None,
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "threestage",
    "threestage-n0",
    "threestage-ulp66",
    "threestage-f1-56",
    "twostage",
    "twostage-f0-34",
    "twostage-flast-66",
    "toy",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESET_NAMES {
            let cfg = by_name(name).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(by_name("nope").is_none());
    }
}
