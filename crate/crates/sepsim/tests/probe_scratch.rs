//! Scratch diagnostics; deleted before commit.

use std::path::Path;

use sepsim::gait::Gait;
use sepsim::hybrid::{initial_state, run_walk, SimOptions};
use sepsim::prosthesis::{build_walker, reference_params};

#[test]
fn refine_scale_sweep() {
    use sepsim::gait::{pack_gait, simplex_minimize, unpack_gait, CURVE_COEFFS, NUM_TRACKED};
    use sepsim::hybrid::poincare_residual;

    let walker = build_walker(reference_params()).unwrap();
    let gait = Gait::load(
        &Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets")).join("reference.gait"),
    )
    .unwrap();
    let mut sim = SimOptions {
        sample_rate: 100.0,
        ..SimOptions::default()
    };
    sim.ode.rtol = 1e-8;
    sim.ode.atol = 1e-10;

    let objective = |x: &[f64]| -> f64 {
        let Ok(g) = unpack_gait(&gait, x) else {
            return f64::INFINITY;
        };
        let Ok((th, thd)) = initial_state(&walker, &g) else {
            return f64::INFINITY;
        };
        poincare_residual(&walker, &g, &sim, &th, &thd).unwrap_or(f64::INFINITY)
    };

    let x0 = pack_gait(&gait);
    // Per-coordinate scales: interior coefficients, tail coefficients,
    // endpoint, v_hip.
    let free = CURVE_COEFFS - 2;
    for (label, interior, tail, endpoint, vh) in [
        ("uniform 0.02", 0.02, 0.02, 0.02, 0.02),
        ("uniform 0.10", 0.10, 0.10, 0.10, 0.05),
        ("tail-heavy", 0.02, 0.15, 0.08, 0.05),
        ("tail-only", 0.005, 0.20, 0.10, 0.05),
    ] {
        let mut scales = Vec::new();
        for _ in 0..2 {
            for _ in 0..NUM_TRACKED {
                for j in 0..free {
                    scales.push(match j {
                        0 | 1 | 2 => interior,
                        3 => tail,
                        _ => endpoint,
                    });
                }
            }
            scales.push(vh);
        }
        let out = simplex_minimize(objective, &x0, &scales, 500, 0);
        println!(
            "{label:14} -> best {:.4e} in {} evals",
            out.value, out.evaluations
        );
    }
}

#[test]
fn first_cycle_mismatch_breakdown() {
    let walker = build_walker(reference_params()).unwrap();
    let gait = Gait::load(
        &Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets")).join("reference.gait"),
    )
    .unwrap();
    let (theta, theta_dot) = initial_state(&walker, &gait).unwrap();
    let opts = SimOptions {
        steps: 2,
        sample_rate: 100.0,
        ..SimOptions::default()
    };
    let out = run_walk(&walker, &gait, &opts, Some((theta.clone(), theta_dot.clone()))).unwrap();
    let names = [
        "base_x", "base_z", "base_phi", "lh", "lk", "la", "rh", "sock_x", "sock_z", "sock_phi",
        "pk", "pa",
    ];
    println!("coordinate   dq            dv");
    for (k, name) in names.iter().enumerate() {
        println!(
            "{name:10}  {:+.6e}  {:+.6e}",
            out.theta[k] - theta[k],
            out.theta_dot[k] - theta_dot[k]
        );
    }
}
