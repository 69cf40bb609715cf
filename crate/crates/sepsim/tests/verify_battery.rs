//! Runs the full verification battery on the reference model and gait and
//! requires every check to pass at its default tolerance.

use std::path::Path;

use sepsim::gait::Gait;
use sepsim::prosthesis::{build_walker, reference_params};
use sepsim::verify::{verify_battery, VerifyOptions};

#[test]
fn battery_passes_on_the_reference_setup() {
    let walker = build_walker(reference_params()).expect("reference model builds");
    let gait = Gait::load(
        &Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets")).join("reference.gait"),
    )
    .expect("reference gait loads");

    let report = verify_battery(&walker, &gait, &VerifyOptions::default()).expect("battery runs");
    for check in &report.checks {
        println!("{check}");
    }
    assert_eq!(report.checks.len(), 14, "seven checks per domain");
    for check in &report.checks {
        assert!(check.samples >= 200 || check.name.contains("locality"), "{check}");
        assert!(check.pass(), "{check}");
    }
}
