//! Run one division through the three-iteration divider and walk the exact
//! error ledger: every truncation residue, the convergence states, and the
//! final margin check per readout stage.
//!
//!     cargo run --release --example single_division

use goldiv::engine::Divider;
use goldiv::exact::log2_abs;
use goldiv::fixedpoint::FixedPoint;
use goldiv::oracle;
use goldiv::presets;

fn main() {
    let divider = Divider::new(presets::three_stage()).expect("preset builds");

    // double-precision style mantissas, written out bit by bit
    let a = FixedPoint::from_binary_str("1.0110100111010010101011110001101010010111000101110101").unwrap();
    let b = FixedPoint::from_binary_str("1.1010001011101010010010010110111110001010110100101001").unwrap();
    println!("a = {}", a.to_binary_string());
    println!("b = {}", b.to_binary_string());

    let out = divider.divide(&a, &b).expect("division runs");
    let ledger = &out.ledger;
    println!("normalized dividend = {} (shifted when a < b)", ledger.dividend.to_binary_string());
    println!("table reciprocal    = {}", ledger.reciprocal.to_binary_string());

    let fmt = |r: &num_rational::BigRational| match log2_abs(r) {
        Some(l) => format!("2^{l:.4}"),
        None => "0".into(),
    };
    println!("initial relative error eps0 = {}", fmt(&ledger.eps0.to_rational()));
    for i in 0..ledger.eps_primes.len() {
        println!(
            "iteration {i}: 1 - D = {:>12}   n = {:>12}   d = {:>12}   f = {:>12}",
            fmt(&ledger.eps_primes[i].to_rational()),
            fmt(&ledger.n_errors[i].to_rational()),
            fmt(&ledger.d_errors[i].to_rational()),
            fmt(&ledger.f_errors[i].to_rational()),
        );
    }

    let exact = oracle::exact_quotient(&ledger.dividend, &ledger.divisor).unwrap();
    for stage in &out.stages {
        let check = oracle::check_margin(&stage.value, &exact, stage.mantissa_bits);
        println!(
            "stage {:>2}: error {:>12} ulp of 2^-{}, margin 2^-{} -> {}",
            stage.name,
            goldiv::exact::decimal_string(&check.error_ulps, 4),
            stage.value.frac_bits(),
            stage.mantissa_bits + 1,
            if check.pass { "pass" } else { "misrounding" },
        );
    }

    // the ledger's analytical expansion reproduces the simulated value exactly
    let rebuilt = ledger.reconstruct_final();
    let simulated = goldiv::engine::raw_final_numerator(divider.config(), &out).unwrap();
    assert_eq!(rebuilt, simulated);
    println!("ledger cross-check: analytical expansion matches the datapath bit for bit");
}
