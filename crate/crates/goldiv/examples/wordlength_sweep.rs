//! Sweep the second factor's width on the three-iteration divider and watch
//! the double-precision verdict flip: the wordlength exploration loop in
//! fifteen lines.
//!
//!     cargo run --release --example wordlength_sweep

use goldiv::bounds::{total_bound, QRange};
use goldiv::config::apply_knob;
use goldiv::exact::decimal_string;
use goldiv::presets;
use goldiv::recip::build;

fn main() {
    println!("{:>4} {:>14} {:>14} {:>8}", "f1", "rig_lo (ulp)", "cet (ulp)", "verdict");
    for width in 54..=60 {
        let mut cfg = presets::three_stage();
        apply_knob(&mut cfg, "f1", width).unwrap();
        let table = build(&cfg.table).unwrap();
        let report = total_bound(&cfg, &table, &QRange::normalized(), false);
        let dp = report.stage("dp").unwrap();
        println!(
            "{width:>4} {:>14} {:>14} {:>8}",
            decimal_string(&dp.rigorous.lo, 2),
            decimal_string(&dp.cet, 2),
            dp.verdict.to_string()
        );
    }
}
