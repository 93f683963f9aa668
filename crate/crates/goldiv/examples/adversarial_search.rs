//! Hunt for real misroundings on the two-iteration divider whose first
//! factor keeps one bit too few. The bound report says the extended
//! precision margin is breached; the targeted search produces witnesses.
//!
//!     cargo run --release --example adversarial_search

use goldiv::campaign::{campaign, CampaignMode, CampaignSpec};
use goldiv::engine::Divider;
use goldiv::exact::decimal_string;
use goldiv::presets;

fn main() {
    let divider = Divider::new(presets::two_stage_f0_reduced()).expect("preset builds");
    let mut spec = CampaignSpec::new(10_000_000, 1, CampaignMode::Adversarial);
    spec.stages = vec!["ep".into()];
    spec.stop_after_witnesses = 4;
    let report = campaign(&divider, &spec).unwrap();
    let bound = report.bound.stage("ep").unwrap();
    println!(
        "bound verdict: {} (rigorous [{}, {}] ulp vs margin {})",
        bound.verdict,
        decimal_string(&bound.rigorous.lo, 4),
        decimal_string(&bound.rigorous.hi, 4),
        decimal_string(&bound.margin, 0)
    );
    let stage = &report.stages[0];
    println!("{} vectors -> {} misroundings", stage.vectors_run, stage.misroundings);
    for w in stage.witnesses.iter().take(4) {
        println!("  error {} ulp at", decimal_string(&w.error_ulp, 6));
        println!("    a = {}", w.a.to_binary_string());
        println!("    b = {}", w.b.to_binary_string());
    }
    assert!(stage.misroundings > 0, "the under-provisioned factor must misround");
}
