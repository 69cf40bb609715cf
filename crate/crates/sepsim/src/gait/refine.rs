//! Derivative-free simplex minimization and the gait parameter packing it
//! searches over.
//!
//! The search engine is a classic Nelder-Mead simplex with the standard
//! reflection/expansion/contraction/shrink coefficients. It is fully
//! deterministic for a given seed: the only randomness is a small seeded
//! jitter on the initial simplex edge lengths, which keeps repeated runs
//! reproducible while letting callers decorrelate restarts.
//!
//! The packing exposes the curve coefficients that boundary matching does
//! not overwrite (indices 2 and up of every tracked curve) plus each
//! domain's hip advance rate target. Phase spans, gains, and the matched
//! leading coefficients stay fixed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{SimError, SimResult};
use crate::gait::data::{Domain, Gait, CURVE_COEFFS, NUM_TRACKED};

/// First curve coefficient the search may move; lower indices are rewritten
/// by boundary matching at every domain entry.
pub const FIRST_FREE_COEFF: usize = 2;

/// Free coefficients per curve.
pub const FREE_COEFFS: usize = CURVE_COEFFS - FIRST_FREE_COEFF;

/// Search dimension: free coefficients of every tracked curve in both
/// domains plus the two hip rate targets.
pub const REFINE_DIM: usize = 2 * (NUM_TRACKED * FREE_COEFFS + 1);

/// Flattens the searchable gait parameters into a vector of length
/// [`REFINE_DIM`]: for each domain in index order, the free coefficients of
/// each curve row-major, then that domain's hip rate target.
pub fn pack_gait(gait: &Gait) -> Vec<f64> {
    let mut x = Vec::with_capacity(REFINE_DIM);
    for d in [Domain::ProsthesisStance, Domain::ProsthesisSwing] {
        let dg = gait.domain(d);
        for row in &dg.alpha {
            x.extend_from_slice(&row[FIRST_FREE_COEFF..]);
        }
        x.push(dg.v_hip);
    }
    x
}

/// Rebuilds a gait from `template` with the searchable parameters replaced
/// by `x`. Validation failures (non-finite values and the like) surface as
/// errors so a search can treat the candidate as infeasible.
pub fn unpack_gait(template: &Gait, x: &[f64]) -> SimResult<Gait> {
    if x.len() != REFINE_DIM {
        return Err(SimError::DimensionMismatch {
            what: "gait parameter vector",
            expected: REFINE_DIM,
            got: x.len(),
        });
    }
    let mut gait = template.clone();
    let mut at = 0;
    for d in [Domain::ProsthesisStance, Domain::ProsthesisSwing] {
        let dg = gait.domain_mut(d);
        for row in dg.alpha.iter_mut() {
            row[FIRST_FREE_COEFF..].copy_from_slice(&x[at..at + FREE_COEFFS]);
            at += FREE_COEFFS;
        }
        dg.v_hip = x[at];
        at += 1;
    }
    // Re-run the constructor so the usual validation applies.
    Gait::new(
        gait.domain(Domain::ProsthesisStance).clone(),
        gait.domain(Domain::ProsthesisSwing).clone(),
        gait.gains,
    )
}

/// Per-coordinate initial simplex edge lengths matching [`pack_gait`]'s
/// layout. Interior coefficients get `coeff_scale`; the next-to-last
/// coefficient of each curve gets `tail_scale` and the endpoint half of it,
/// because the cycle-closure residual lives almost entirely in post-impact
/// rates, which the curve tails control; `v_hip_scale` covers the rate
/// targets.
pub fn refine_scales(coeff_scale: f64, tail_scale: f64, v_hip_scale: f64) -> Vec<f64> {
    let mut s = Vec::with_capacity(REFINE_DIM);
    for _ in 0..2 {
        for _ in 0..NUM_TRACKED {
            for j in 0..FREE_COEFFS {
                s.push(match j {
                    _ if j == FREE_COEFFS - 1 => 0.5 * tail_scale,
                    _ if j == FREE_COEFFS - 2 => tail_scale,
                    _ => coeff_scale,
                });
            }
        }
        s.push(v_hip_scale);
    }
    s
}

/// Result of a simplex search.
#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    /// Best point found (including the start if nothing beat it).
    pub x: Vec<f64>,
    /// Objective value at `x`.
    pub value: f64,
    /// Objective evaluations spent.
    pub evaluations: usize,
}

/// Minimizes `f` from `x0` with a Nelder-Mead simplex, spending at most
/// `budget` objective evaluations.
///
/// Non-finite objective values are treated as infeasible (+inf), so `f` may
/// signal failures that way. The returned point is the best ever evaluated,
/// which makes the result monotone: its value never exceeds `f(x0)`.
/// `scales[k]` sets the initial simplex edge along coordinate `k`; `seed`
/// jitters those edges reproducibly.
pub fn simplex_minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    scales: &[f64],
    budget: usize,
    seed: u64,
) -> SimplexOutcome {
    assert_eq!(x0.len(), scales.len(), "one scale per coordinate");
    let n = x0.len();
    let mut evals = 0usize;
    let mut best = SimplexOutcome {
        x: x0.to_vec(),
        value: f64::INFINITY,
        evaluations: 0,
    };

    let mut eval = |x: &[f64], evals: &mut usize, best: &mut SimplexOutcome| -> f64 {
        let raw = f(x);
        let v = if raw.is_finite() { raw } else { f64::INFINITY };
        *evals += 1;
        if v < best.value {
            best.x = x.to_vec();
            best.value = v;
        }
        v
    };

    // Initial simplex: x0 plus one jittered step along each coordinate.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    if budget == 0 {
        best.evaluations = 0;
        return best;
    }
    let v0 = eval(x0, &mut evals, &mut best);
    simplex.push((x0.to_vec(), v0));
    for k in 0..n {
        let jitter = 1.0 + 0.2 * (rng.gen::<f64>() - 0.5);
        if evals >= budget {
            best.evaluations = evals;
            return best;
        }
        let mut xk = x0.to_vec();
        xk[k] += scales[k] * jitter;
        let vk = eval(&xk, &mut evals, &mut best);
        simplex.push((xk, vk));
    }

    let (rho, chi, gamma, sigma) = (1.0, 2.0, 0.5, 0.5);
    while evals < budget {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN objective"));
        let worst = simplex[n].clone();
        let second = simplex[n - 1].1;
        let best_v = simplex[0].1;

        // Centroid of everything but the worst vertex.
        let mut c = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for k in 0..n {
                c[k] += x[k] / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            (0..n).map(|k| c[k] + t * (c[k] - worst.0[k])).collect()
        };

        let xr = along(rho);
        let vr = eval(&xr, &mut evals, &mut best);
        if vr < best_v && evals < budget {
            let xe = along(rho * chi);
            let ve = eval(&xe, &mut evals, &mut best);
            simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
        } else if vr < second {
            simplex[n] = (xr, vr);
        } else if evals < budget {
            let (xc, reference) = if vr < worst.1 {
                (along(rho * gamma), vr) // outside contraction
            } else {
                (along(-gamma), worst.1) // inside contraction
            };
            let vc = eval(&xc, &mut evals, &mut best);
            if vc <= reference {
                simplex[n] = (xc, vc);
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for k in 0..n {
                        x[k] = anchor[k] + sigma * (x[k] - anchor[k]);
                    }
                    if evals >= budget {
                        break;
                    }
                    *v = eval(x, &mut evals, &mut best);
                }
            }
        }
    }
    best.evaluations = evals;
    best
}
