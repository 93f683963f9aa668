//! Build the two shipped bipartite reciprocal tables, measure their exact
//! worst-case relative error by exhaustive traversal, and show the partition
//! search the geometries went through.
//!
//!     cargo run --release --example table_analysis

use goldiv::exact::log2_rational;
use goldiv::presets;
use goldiv::recip::{build, search_partitions};

fn main() {
    for (name, cfg) in [("three-stage", presets::three_stage_table()), ("two-stage", presets::two_stage_table())] {
        println!(
            "{name}: large 2^{} x {}, small 2^{} x {}, {}-bit subtractor",
            cfg.large_index_bits(),
            cfg.large_out_bits,
            cfg.small_index_bits(),
            cfg.small_out_bits,
            cfg.sub_bits
        );
        let table = build(&cfg).expect("geometry builds");
        let max = table.max_rel_error();
        println!("  measured max relative error: 2^{:.6}", log2_rational(&max));
        let (neg, pos) = table.signed_extremes();
        println!(
            "  signed extremes: -2^{:.6} / +2^{:.6}",
            log2_rational(&-neg),
            log2_rational(&pos)
        );
        println!("  witness divisor: {}", table.achieving_input().to_binary_string());
        println!("  three worst input intervals:");
        for iv in table.find_worst_divisors(3) {
            let mag = if iv.local_error < num_rational::BigRational::from_integer(0.into()) {
                -iv.local_error.clone()
            } else {
                iv.local_error.clone()
            };
            println!(
                "    [{}, {})  local 2^{:.6}",
                iv.lo.to_binary_string(),
                iv.hi.to_binary_string(),
                log2_rational(&mag)
            );
        }
        // every slice split compatible with the same index widths
        let best = search_partitions(
            cfg.large_index_bits(),
            cfg.large_out_bits,
            cfg.small_index_bits(),
            cfg.small_out_bits,
            cfg.sub_bits,
            cfg.implied_leading_bit,
        )
        .unwrap();
        println!(
            "  partition search confirms n1={} n2={} n3={} (max 2^{:.6})",
            best.config().n1,
            best.config().n2,
            best.config().n3,
            log2_rational(&best.max_rel_error())
        );
    }
}
