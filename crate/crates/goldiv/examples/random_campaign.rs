//! A random verification campaign on the three-iteration divider: a million
//! double-precision vectors against the exact rational oracle, with the
//! error histogram written next to its theoretical overlay.
//!
//!     cargo run --release --example random_campaign

use goldiv::campaign::{campaign, report_histogram, CampaignMode, CampaignSpec};
use goldiv::engine::Divider;
use goldiv::exact::decimal_string;
use goldiv::presets;

fn main() {
    let divider = Divider::new(presets::three_stage()).expect("preset builds");
    let mut spec = CampaignSpec::new(1_000_000, 2024, CampaignMode::Random);
    spec.stages = vec!["ep".into()];
    let report = campaign(&divider, &spec).unwrap();
    let stage = &report.stages[0];
    println!(
        "{} vectors on stage ep: {} misroundings, errors in [{}, {}] ulp",
        stage.vectors_run,
        stage.misroundings,
        decimal_string(stage.min_error_ulp.as_ref().unwrap(), 4),
        decimal_string(stage.max_error_ulp.as_ref().unwrap(), 4)
    );
    let bound = report.bound.stage("ep").unwrap();
    println!(
        "rigorous interval [{}, {}] ulp contains the support",
        decimal_string(&bound.rigorous.lo, 4),
        decimal_string(&bound.rigorous.hi, 4)
    );
    let path = std::env::temp_dir().join("goldiv_ep_hist.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    report_histogram(stage, divider.config(), 1.5, &mut f).unwrap();
    println!("histogram written to {}", path.display());
    assert_eq!(stage.misroundings, 0);
}
