//! Error-bound reports for the shipped dividers and their deliberately
//! under-provisioned variants: the accumulative interval, the convergent
//! pull, and the rigorous total against each readout margin.
//!
//!     cargo run --release --example error_bounds

use goldiv::bounds::{total_bound, QRange};
use goldiv::engine::Divider;
use goldiv::exact::decimal_string;
use goldiv::presets;

fn main() {
    for name in ["threestage", "threestage-ulp66", "threestage-f1-56", "twostage", "twostage-f0-34"] {
        let cfg = presets::by_name(name).unwrap();
        let divider = Divider::new(cfg).expect("preset builds");
        let report = total_bound(divider.config(), divider.table(), &QRange::normalized(), false);
        println!("{name}:");
        for s in &report.stages {
            println!(
                "  {:>3} margin {:>6} ulp | accumulative [{:>10}, {:>9}] | convergent {:>14} | total [{:>14}, {:>13}] -> {}",
                s.name,
                decimal_string(&s.margin, 0),
                decimal_string(&s.aaet.lo, 2),
                decimal_string(&s.aaet.hi, 2),
                decimal_string(&s.cet, 4),
                decimal_string(&s.rigorous.lo, 4),
                decimal_string(&s.rigorous.hi, 4),
                s.verdict
            );
        }
    }
}
