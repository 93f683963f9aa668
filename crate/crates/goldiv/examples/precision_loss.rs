//! How much precision a truncated iterative factor costs: the loss curve
//! over the extra bits kept beyond the doubled error exponent, and the
//! worked example of a 35-bit factor at a 2^-17.3 starting error.
//!
//!     cargo run --example precision_loss

use goldiv::bounds::{combined_factor_error_log2, precision_loss_curve};

fn main() {
    println!("loss in bits vs extra factor bits (error exponent 13.65):");
    for (x, loss) in precision_loss_curve(13.65, 0..=8) {
        let bar = "#".repeat((loss * 40.0) as usize);
        println!("  +{x}: {loss:6.3}  {bar}");
    }
    println!();
    println!("three extra bits keep the loss around 0.2 bits, the knee of the curve.");
    println!();
    let combined = combined_factor_error_log2(17.3, 35);
    println!("error 2^-17.3 squared is 2^-34.6; a 35-bit factor degrades it to 2^{combined:.2}");
}
