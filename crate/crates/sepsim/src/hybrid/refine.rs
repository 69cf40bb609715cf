//! Periodic-gait polishing: ties the simplex search to the walking
//! simulation.
//!
//! The objective for a candidate gait is the cycle-closure residual of its
//! own nominal entry state: solve the consistent entry state, walk one full
//! cycle, and measure how far the state returns from where it started
//! ([`poincare_residual`]). Candidates that cannot produce an entry state or
//! fall mid-cycle are infeasible. The search moves only the curve
//! coefficients that survive boundary matching plus the hip rate targets,
//! so every candidate stays compatible with the runtime controller.

use crate::error::{SimError, SimResult};
use crate::gait::{pack_gait, refine_scales, simplex_minimize, unpack_gait, Gait};
use crate::hybrid::sim::{initial_state, poincare_residual, run_walk, SimOptions};
use crate::prosthesis::Walker;

/// Knobs for [`refine_gait`].
#[derive(Debug, Clone)]
pub struct RefineOptions {
    /// Objective evaluations the search may spend; zero skips the search.
    pub budget: usize,
    /// Seed for the initial simplex jitter.
    pub seed: u64,
    /// Initial simplex edge for interior curve coefficients, in radians.
    pub coeff_scale: f64,
    /// Initial simplex edge for the curve-tail coefficients, in radians.
    pub tail_scale: f64,
    /// Initial simplex edge for the hip rate targets, in m/s.
    pub v_hip_scale: f64,
    /// Simulation options for objective evaluations; `steps` is ignored
    /// (each evaluation runs exactly one cycle).
    pub sim: SimOptions,
}

impl Default for RefineOptions {
    fn default() -> Self {
        let mut sim = SimOptions {
            // The objective only needs the end state, so record sparsely.
            sample_rate: 100.0,
            ..SimOptions::default()
        };
        // Residuals of interest sit far above integration error, so a
        // looser tolerance buys evaluations without moving the optimum.
        sim.ode.rtol = 1e-8;
        sim.ode.atol = 1e-10;
        RefineOptions {
            budget: 500,
            seed: 0,
            coeff_scale: 0.02,
            tail_scale: 0.15,
            v_hip_scale: 0.05,
            sim,
        }
    }
}

/// What the search did.
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    /// Best gait found; the input gait when nothing beat it.
    pub gait: Gait,
    /// Cycle-closure residual of the input gait.
    pub initial_residual: f64,
    /// Residual of the returned gait.
    pub final_residual: f64,
    /// Objective evaluations spent (the feasibility run is not counted).
    pub evaluations: usize,
}

/// Cycle-closure residual of a gait from its own nominal entry state.
fn closure_residual(walker: &Walker, gait: &Gait, sim: &SimOptions) -> SimResult<f64> {
    let (theta, theta_dot) = initial_state(walker, gait)?;
    poincare_residual(walker, gait, sim, &theta, &theta_dot)
}

/// Polishes `gait0` so its nominal entry state closes on itself more
/// tightly after one full cycle. Returns the best gait found; with a zero
/// budget the input is returned unchanged. The input gait must complete two
/// cycles from its nominal entry state.
pub fn refine_gait(walker: &Walker, gait0: &Gait, opts: &RefineOptions) -> SimResult<RefineOutcome> {
    // Feasibility gate: the seed gait must survive two full cycles.
    let gate = SimOptions {
        steps: 4,
        ..opts.sim
    };
    let start = initial_state(walker, gait0)?;
    run_walk(walker, gait0, &gate, Some(start)).map_err(|e| {
        SimError::Config(format!(
            "seed gait does not complete two cycles from its nominal entry: {e}"
        ))
    })?;
    let initial = closure_residual(walker, gait0, &opts.sim)?;

    if opts.budget == 0 {
        return Ok(RefineOutcome {
            gait: gait0.clone(),
            initial_residual: initial,
            final_residual: initial,
            evaluations: 0,
        });
    }

    let x0 = pack_gait(gait0);
    let scales = refine_scales(opts.coeff_scale, opts.tail_scale, opts.v_hip_scale);
    let objective = |x: &[f64]| -> f64 {
        match unpack_gait(gait0, x) {
            Ok(gait) => closure_residual(walker, &gait, &opts.sim).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    };
    let found = simplex_minimize(objective, &x0, &scales, opts.budget, opts.seed);

    // The start vertex is evaluated first, so the best value never exceeds
    // the initial residual; keep the input gait when nothing beat it.
    let (gait, final_residual) = if found.value < initial {
        (unpack_gait(gait0, &found.x)?, found.value)
    } else {
        (gait0.clone(), initial)
    };
    Ok(RefineOutcome {
        gait,
        initial_residual: initial,
        final_residual,
        evaluations: found.evaluations,
    })
}
