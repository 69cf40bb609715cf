//! End-to-end check that the prosthesis side of a recorded walk can be
//! re-integrated as a standalone system from the recorded boundary signals,
//! reproducing the recorded joint trajectories and inputs.

use std::path::Path;

use sepsim::gait::{Domain, Gait};
use sepsim::hybrid::{replay_subsystem, run_walk, ReplayOptions, SimOptions};
use sepsim::prosthesis::{build_walker, reference_params, Walker};

fn asset(name: &str) -> std::path::PathBuf {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets")).join(name)
}

fn reference_setup() -> (Walker, Gait) {
    let walker = build_walker(reference_params()).expect("reference model builds");
    let gait = Gait::load(&asset("reference.gait")).expect("reference gait loads");
    (walker, gait)
}

#[test]
fn replay_reproduces_the_recorded_walk() {
    let (walker, gait) = reference_setup();
    let opts = SimOptions {
        steps: 4,
        sample_rate: 1000.0,
        ..SimOptions::default()
    };
    let walk = run_walk(&walker, &gait, &opts, None).expect("walk completes");

    let replay =
        replay_subsystem(&walker, &gait, &walk.trace, &ReplayOptions::default()).expect("replay");

    let stance = replay
        .segments
        .iter()
        .filter(|s| s.domain == Domain::ProsthesisStance)
        .count();
    let swing = replay
        .segments
        .iter()
        .filter(|s| s.domain == Domain::ProsthesisSwing)
        .count();
    assert!(stance >= 2, "expected at least two stance passes: {stance}");
    assert!(swing >= 1, "expected at least one swing pass: {swing}");
    for seg in &replay.segments {
        assert!(
            seg.knots >= 100,
            "segment starting at t = {:.3} compared only {} samples",
            seg.t_start,
            seg.knots
        );
    }

    println!(
        "replay deviations: joints {:.3e}, base {:.3e}, inputs {:.3e}",
        replay.dev_joints, replay.dev_base, replay.dev_inputs
    );
    assert!(
        replay.dev_joints < 1e-6,
        "joint replay deviation {:.3e}",
        replay.dev_joints
    );
    assert!(
        replay.dev_base < 1e-6,
        "base replay deviation {:.3e}",
        replay.dev_base
    );
    assert!(
        replay.dev_inputs < 1e-4,
        "input replay deviation {:.3e}",
        replay.dev_inputs
    );
}
