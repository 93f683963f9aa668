//! Enumerate every input pair of the toy divider and check the whole story
//! at once: no misroundings, every observed error inside the rigorous bound
//! interval, and the extremes close to it.
//!
//!     cargo run --release --example exhaustive_toy

use goldiv::campaign::{campaign, CampaignMode, CampaignSpec};
use goldiv::engine::Divider;
use goldiv::exact::decimal_string;
use goldiv::presets;

fn main() {
    let divider = Divider::new(presets::toy()).expect("toy builds");
    let report = campaign(&divider, &CampaignSpec::new(0, 0, CampaignMode::ExhaustiveToy)).unwrap();
    let bound = report.bound.stage("toy").unwrap();
    let stage = &report.stages[0];
    println!("rigorous interval: [{}, {}] ulp, margin {} ulp -> {}",
        decimal_string(&bound.rigorous.lo, 4), decimal_string(&bound.rigorous.hi, 4),
        decimal_string(&bound.margin, 0), bound.verdict);
    println!("enumerated {} input pairs: {} misroundings", stage.vectors_run, stage.misroundings);
    println!("observed error range: [{}, {}] ulp",
        decimal_string(stage.min_error_ulp.as_ref().unwrap(), 4),
        decimal_string(stage.max_error_ulp.as_ref().unwrap(), 4));
    assert!(stage.min_error_ulp.as_ref().unwrap() >= &bound.rigorous.lo);
    assert!(stage.max_error_ulp.as_ref().unwrap() <= &bound.rigorous.hi);
    assert_eq!(stage.misroundings, 0);
    println!("every error sits inside the rigorous interval");
}
