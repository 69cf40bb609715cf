//! Numerical verification battery for the separable-subsystem structure.
//!
//! States are sampled along a simulated walk, together with
//! constraint-consistent random perturbations, and every sampled state is
//! checked within its domain:
//!
//! * the same control results from three arrangements of the law: the full
//!   closed loop, the socket-wrench arrangement of the full model (socket
//!   constraint replaced by its measured wrench), and the standalone
//!   prosthesis subsystem fed by measured boundary signals;
//! * the closed-loop accelerations of those arrangements agree;
//! * in the socket-wrench arrangement, human-side inputs cannot reach the
//!   prosthesis-side equations at all (input-map separability);
//! * the prosthesis-side output values and rates are insensitive to
//!   human-side state beyond the declared phase signal (locality).
//!
//! Each check reports the worst scaled residual over its samples; the CLI
//! prints one line per check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ctrl::{
    check_locality, check_separability, scaled_residual, CheckReport, LinearizingLaw, TimePhase,
};
use crate::error::SimResult;
use crate::gait::{subsystem_plan, Domain, Gait, PlanInputs};
use crate::hybrid::{enter_domain, run_walk, sole_frames, DomainSetup, SimOptions, WELD_INDEX};
use crate::multibody::{
    constrained_dynamics, project_state, Constraint, ConstraintSet, KinCache, Pose,
};
use crate::prosthesis::{sub_state, wrench_torque, Walker};

/// Settings for the verification battery.
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Walking steps simulated to produce the sampling backbone.
    pub steps: usize,
    /// Trace sample rate of the backbone walk, Hz.
    pub sample_rate: f64,
    /// Minimum number of sampled states per domain (half of them perturbed).
    pub samples_per_domain: usize,
    /// Seed for the perturbation stream.
    pub seed: u64,
    /// Tolerance for control agreement across arrangements.
    pub tol_control: f64,
    /// Tolerance for closed-loop acceleration agreement.
    pub tol_field: f64,
    /// Tolerance for input-map separability.
    pub tol_separability: f64,
    /// Tolerance for output locality under finite differencing.
    pub tol_locality: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            steps: 4,
            sample_rate: 1000.0,
            samples_per_domain: 240,
            seed: 0,
            tol_control: 1e-8,
            tol_field: 1e-8,
            tol_separability: 1e-10,
            tol_locality: 1e-6,
        }
    }
}

/// All check reports from one battery run.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckReport>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass())
    }
}

/// One recorded domain pass with its controller and sampled states.
struct SegmentSamples {
    setup: DomainSetup,
    sub_law: LinearizingLaw,
    sub_set: ConstraintSet,
    states: Vec<(DVector<f64>, DVector<f64>)>,
}

fn stack(theta: &DVector<f64>, theta_dot: &DVector<f64>) -> DVector<f64> {
    let eta = theta.len();
    let mut x = DVector::zeros(2 * eta);
    x.rows_mut(0, eta).copy_from(theta);
    x.rows_mut(eta, eta).copy_from(theta_dot);
    x
}

fn split(x: &DVector<f64>, eta: usize) -> (DVector<f64>, DVector<f64>) {
    (
        DVector::from(x.rows(0, eta)),
        DVector::from(x.rows(eta, eta)),
    )
}

/// Human-side state indices the prosthesis outputs must not respond to. In
/// swing the intact knee and ankle carry the phase signal, which the
/// subsystem receives as a declared boundary input, so those two coordinates
/// are exempt there.
fn hidden_human_indices(walker: &Walker, domain: Domain) -> Vec<usize> {
    let c = &walker.coords;
    let mut coords = vec![c.base[0], c.base[1], c.base[2], c.lh, c.rh];
    if domain == Domain::ProsthesisStance {
        coords.push(c.lk);
        coords.push(c.la);
    }
    let eta = walker.full.dof();
    let mut idx = coords.clone();
    idx.extend(coords.iter().map(|&k| eta + k));
    idx
}

fn merged(name: String, tol: f64, parts: &[CheckReport]) -> CheckReport {
    CheckReport {
        name,
        max_residual: parts.iter().fold(0.0, |m, p| m.max(p.max_residual)),
        tol,
        samples: parts.iter().map(|p| p.samples).sum(),
    }
}

/// Builds the per-segment sample sets: the controller exactly as the walk
/// used it, the matching subsystem law built from the same spliced data, and
/// a mix of recorded and perturbed-then-reprojected states.
fn collect_segments(
    walker: &Walker,
    gait: &Gait,
    opts: &VerifyOptions,
) -> SimResult<Vec<SegmentSamples>> {
    let walk = run_walk(
        walker,
        gait,
        &SimOptions {
            steps: opts.steps,
            sample_rate: opts.sample_rate,
            ..SimOptions::default()
        },
        None,
    )?;
    let segments = walk.trace.segments();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut groups = Vec::with_capacity(segments.len());

    for (domain, range) in segments.iter().cloned() {
        let n_seg = segments.iter().filter(|(d, _)| *d == domain).count();
        let rows = &walk.trace.rows[range];
        let entry = &rows[0];
        let setup = enter_domain(walker, gait, domain, entry.t, &entry.theta, &entry.theta_dot)?;

        let dgait = gait.domain(domain);
        let plan = subsystem_plan(
            &walker.sub,
            setup.r_sk,
            setup.r_sa,
            &PlanInputs {
                domain,
                dgait,
                curves: &setup.curves,
                phase_start: setup.phase_start,
                gains: gait.gains,
            },
        )?;
        let sub_law = LinearizingLaw::new(plan.outputs, plan.gains)?;
        let (sub_th0, _) = sub_state(walker, &entry.theta, &entry.theta_dot);
        let sub_set = match domain {
            Domain::ProsthesisStance => {
                let kin = KinCache::new(&walker.sub, &sub_th0);
                ConstraintSet::new(
                    &walker.sub,
                    vec![Constraint::PosePin {
                        frame: walker.frames.sub_sole,
                        target: kin.frame_pose(walker.frames.sub_sole),
                    }],
                )?
            }
            Domain::ProsthesisSwing => ConstraintSet::empty(),
        };

        // Half the quota from recorded rows spread over the segment, half
        // from random perturbations projected back onto the constraints.
        let base = (opts.samples_per_domain + 2 * n_seg - 1) / (2 * n_seg);
        let mut states = Vec::with_capacity(2 * base);
        for k in 0..base {
            let idx = k * (rows.len() - 1) / base.max(1);
            let row = &rows[idx];
            states.push((row.theta.clone(), row.theta_dot.clone()));

            let mut th = row.theta.clone();
            let mut thd = row.theta_dot.clone();
            for i in 0..th.len() {
                th[i] += 1e-3 * (rng.gen::<f64>() * 2.0 - 1.0);
            }
            for i in 0..thd.len() {
                thd[i] += 1e-2 * (rng.gen::<f64>() * 2.0 - 1.0);
            }
            project_state(&walker.full, &setup.set, &mut th, &mut thd)?;
            states.push((th, thd));
        }

        groups.push(SegmentSamples {
            setup,
            sub_law,
            sub_set,
            states,
        });
    }
    Ok(groups)
}

/// Runs every check over freshly sampled states and returns one report per
/// check and domain.
pub fn verify_battery(
    walker: &Walker,
    gait: &Gait,
    opts: &VerifyOptions,
) -> SimResult<VerifyReport> {
    let groups = collect_segments(walker, gait, opts)?;
    let eta = walker.full.dof();
    let c = &walker.coords;
    let mut checks = Vec::new();

    for domain in [Domain::ProsthesisStance, Domain::ProsthesisSwing] {
        let segs: Vec<&SegmentSamples> = groups
            .iter()
            .filter(|s| s.setup.domain == domain)
            .collect();

        // Pairwise agreement checks, accumulated by hand because each sample
        // carries its own segment controller.
        let mut worst = [0.0f64; 4];
        let mut n = 0usize;
        for seg in &segs {
            for (th, thd) in &seg.states {
                let ev = seg.setup.eval(walker, th, thd)?;

                // Socket-wrench arrangement: drop the socket constraint and
                // apply its measured wrench as an exogenous force.
                let kin = KinCache::new(&walker.full, th);
                let data = seg.setup.set.data(&kin, thd)?;
                let wr = seg.setup.set.row_range(WELD_INDEX);
                let wrench_v =
                    DVector::from_vec(vec![ev.wrench[0], ev.wrench[1], ev.wrench[2]]);
                let tau_ext = data.jac.rows(wr.start, wr.len()).transpose() * &wrench_v;
                let pin_only = ConstraintSet::new(
                    &walker.full,
                    vec![seg.setup.set.constraints()[0].clone()],
                )?;
                let pin_dyn =
                    constrained_dynamics(&walker.full, &pin_only, th, thd, Some(&tau_ext))?;
                let pin_ev = seg.setup.law.eval(&pin_dyn, th, thd, None)?;
                worst[0] = worst[0].max(scaled_residual(&ev.ctrl.u, &pin_ev.u));
                worst[1] = worst[1].max(scaled_residual(&ev.accel, &pin_dyn.accel(&pin_ev.u)));

                // Standalone subsystem at the transformed state, fed the
                // measured wrench and phase signals.
                let (sth, sthd) = sub_state(walker, th, thd);
                let text = wrench_torque(&walker.sub, sth[2], &ev.wrench);
                let sub_dyn =
                    constrained_dynamics(&walker.sub, &seg.sub_set, &sth, &sthd, Some(&text))?;
                let tp = TimePhase {
                    tau: ev.ctrl.tau,
                    tau_dot: ev.tau_dot,
                    tau_ddot: ev.tau_ddot,
                };
                let sub_ev = seg.sub_law.eval(&sub_dyn, &sth, &sthd, Some(&tp))?;
                let u_s = DVector::from_vec(vec![ev.ctrl.u[4], ev.ctrl.u[5]]);
                worst[2] = worst[2].max(scaled_residual(&sub_ev.u, &u_s));

                // Subsystem acceleration vs the full model seen through the
                // cut: socket frame acceleration plus the prosthetic joints.
                let js = kin.frame_jacobian(walker.frames.sock_child);
                let jd = kin.frame_jac_dot_qdot(walker.frames.sock_child, thd);
                let fa = &js * &ev.accel + &jd;
                let acc_s_full =
                    DVector::from_vec(vec![fa[0], fa[1], fa[2], ev.accel[c.pk], ev.accel[c.pa]]);
                worst[3] =
                    worst[3].max(scaled_residual(&sub_dyn.accel(&sub_ev.u), &acc_s_full));
                n += 1;
            }
        }
        let key = domain.key();
        checks.push(CheckReport {
            name: format!("control-match-socket-wrench[{key}]"),
            max_residual: worst[0],
            tol: opts.tol_control,
            samples: n,
        });
        checks.push(CheckReport {
            name: format!("accel-match-socket-wrench[{key}]"),
            max_residual: worst[1],
            tol: opts.tol_field,
            samples: n,
        });
        checks.push(CheckReport {
            name: format!("control-match-subsystem[{key}]"),
            max_residual: worst[2],
            tol: opts.tol_control,
            samples: n,
        });
        checks.push(CheckReport {
            name: format!("accel-match-subsystem[{key}]"),
            max_residual: worst[3],
            tol: opts.tol_field,
            samples: n,
        });

        // Input-map separability in the socket-wrench arrangement, stated in
        // the subsystem's own coordinates: socket-frame world velocity rows
        // plus the prosthetic joint rows. Tree coordinates will not do here,
        // because the socket offsets are measured relative to the residual
        // thigh and so pick up human motion even when the prosthesis itself
        // does not respond; mapping through the socket frame Jacobian states
        // the claim about the physical subsystem.
        let stacked: Vec<DVector<f64>> = segs
            .iter()
            .flat_map(|s| s.states.iter().map(|(th, thd)| stack(th, thd)))
            .collect();
        let pin_frame = sole_frames(walker, domain).0;
        let g_map = |x: &DVector<f64>| -> DMatrix<f64> {
            let (th, thd) = split(x, eta);
            let set = ConstraintSet::new(
                &walker.full,
                vec![Constraint::PosePin {
                    frame: pin_frame,
                    // The input map does not depend on the pin target.
                    target: Pose {
                        x: 0.0,
                        z: 0.0,
                        phi: 0.0,
                    },
                }],
            )
            .expect("pin set on a built model");
            let dynamics = constrained_dynamics(&walker.full, &set, &th, &thd, None)
                .expect("dynamics at a sampled state");
            let kin = KinCache::new(&walker.full, &th);
            let js = kin.frame_jacobian(walker.frames.sock_child);
            let mut ts = DMatrix::zeros(5, eta);
            ts.view_mut((0, 0), (3, eta)).copy_from(&js);
            ts[(3, c.pk)] = 1.0;
            ts[(4, c.pa)] = 1.0;
            ts * &dynamics.g_eff
        };
        checks.push(check_separability(
            &format!("input-separability[{key}]"),
            &g_map,
            &[0, 1, 2, 3, 4],
            &[0, 1, 2, 3],
            &stacked,
            opts.tol_separability,
        ));

        // Output locality: prosthesis-side output values and rates must not
        // respond to hidden human-side state.
        let r_index = hidden_human_indices(walker, domain);
        let mut y_parts = Vec::new();
        let mut yd_parts = Vec::new();
        for seg in &segs {
            let seg_states: Vec<DVector<f64>> = seg
                .states
                .iter()
                .map(|(th, thd)| stack(th, thd))
                .collect();
            let y_map = |x: &DVector<f64>| -> DVector<f64> {
                let (th, thd) = split(x, eta);
                let vals: Vec<f64> = seg
                    .setup
                    .s_rows
                    .iter()
                    .map(|&r| {
                        seg.setup.law.outputs[r]
                            .eval(&th, &thd, None)
                            .expect("output row at a sampled state")
                            .y
                    })
                    .collect();
                DVector::from_vec(vals)
            };
            let yd_map = |x: &DVector<f64>| -> DVector<f64> {
                let (th, thd) = split(x, eta);
                let vals: Vec<f64> = seg
                    .setup
                    .s_rows
                    .iter()
                    .filter_map(|&r| {
                        seg.setup.law.outputs[r]
                            .eval(&th, &thd, None)
                            .expect("output row at a sampled state")
                            .ydot
                    })
                    .collect();
                DVector::from_vec(vals)
            };
            y_parts.push(check_locality(
                "part",
                &y_map,
                &r_index,
                &seg_states,
                opts.tol_locality,
            ));
            yd_parts.push(check_locality(
                "part",
                &yd_map,
                &r_index,
                &seg_states,
                opts.tol_locality,
            ));
        }
        checks.push(merged(
            format!("output-locality[{key}]"),
            opts.tol_locality,
            &y_parts,
        ));
        checks.push(merged(
            format!("output-rate-locality[{key}]"),
            opts.tol_locality,
            &yd_parts,
        ));
    }

    Ok(VerifyReport { checks })
}
