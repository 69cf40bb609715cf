//! Re-runs the prosthesis side of a recorded walk as a standalone system.
//!
//! A recorded trace carries everything the prosthesis-side controller is
//! allowed to see: its own joint state, the socket pose and velocity, the
//! interaction wrench transmitted through the socket, and the gait phase
//! signal (which during swing is measured on the intact leg). This module
//! rebuilds the prosthesis-side controller from the gait file and those
//! signals alone, cuts the model at the socket, and re-integrates the five
//! subsystem coordinates under the recorded boundary signals.
//!
//! If the subsystem control law is genuinely self-contained, the
//! re-integrated trajectory and inputs reproduce the recorded ones to
//! integration and interpolation accuracy. The deviations reported here are
//! therefore an operational test of the separation structure: nothing from
//! the human side enters the replay except through the declared boundary
//! signals.

use nalgebra::DVector;

use crate::ctrl::{LinearizingLaw, TimePhase};
use crate::error::{SimError, SimResult};
use crate::gait::{
    roles, stance_lever_arms, subsystem_plan, Bezier, Domain, DomainGait, Gait, PlanInputs,
};
use crate::hybrid::ode::{Dopri5, OdeOptions};
use crate::hybrid::trace::{SegmentInterp, Trace, TraceRow};
use crate::multibody::{constrained_dynamics, Constraint, ConstraintSet, KinCache, project_state};
use crate::prosthesis::{sub_state, wrench_torque, Walker};

/// Prosthesis-side degrees of freedom: socket pose plus knee and ankle.
const SUB_DOF: usize = 5;

/// Integration settings for the subsystem replay.
#[derive(Debug, Clone, Default)]
pub struct ReplayOptions {
    pub ode: OdeOptions,
    /// Keep a per-sample record of the replayed trajectory and its
    /// deviations, for CSV export.
    pub record: bool,
}

/// One replayed sample, kept when [`ReplayOptions::record`] is set.
#[derive(Debug, Clone)]
pub struct ReplayRow {
    pub t: f64,
    pub domain: Domain,
    /// Replayed subsystem configuration and rates.
    pub theta: DVector<f64>,
    pub theta_dot: DVector<f64>,
    /// Replayed subsystem inputs.
    pub u: DVector<f64>,
    /// Componentwise `|state - recorded|`, configuration then rates.
    pub dev_state: DVector<f64>,
    /// Componentwise `|u - recorded|`.
    pub dev_u: DVector<f64>,
}

/// Agreement between one replayed domain pass and the recording.
#[derive(Debug, Clone)]
pub struct SegmentReport {
    pub domain: Domain,
    pub t_start: f64,
    pub t_end: f64,
    /// Number of recorded samples compared against.
    pub knots: usize,
    /// Max abs deviation of the prosthetic joint angles and rates.
    pub dev_joints: f64,
    /// Max abs deviation of the socket pose and velocity.
    pub dev_base: f64,
    /// Max abs deviation of the prosthesis-side inputs.
    pub dev_inputs: f64,
}

/// Replay result over a whole trace.
#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub segments: Vec<SegmentReport>,
    /// Maxima of the per-segment deviations.
    pub dev_joints: f64,
    pub dev_base: f64,
    pub dev_inputs: f64,
    /// Per-sample records, filled only when requested.
    pub rows: Vec<ReplayRow>,
}

/// Curve rows the prosthesis tracks in `domain`, as
/// `(canonical row, subsystem coordinate)` pairs.
fn tracked_sub_rows(domain: Domain) -> &'static [(usize, usize)] {
    match domain {
        // Stance ankle row; the hip advance rate row has no curve.
        Domain::ProsthesisStance => &[(0, 4)],
        // Swing knee and swing ankle rows.
        Domain::ProsthesisSwing => &[(3, 3), (4, 4)],
    }
}

/// Builds the prosthesis-side control law for one domain pass from the gait
/// file and prosthesis-visible entry data only: the subsystem state and, in
/// swing, the recorded phase rate. The curve resplice repeats the arithmetic
/// the original controller performed, restricted to the prosthesis-side rows,
/// so the reconstructed law matches the recorded one exactly.
fn rebuild_sub_law(
    walker: &Walker,
    domain: Domain,
    dgait: &DomainGait,
    gait: &Gait,
    sub_theta: &DVector<f64>,
    sub_theta_dot: &DVector<f64>,
    entry_tau_dot: f64,
) -> SimResult<LinearizingLaw> {
    // The prosthesis leg's thigh and shank lengths, read from the model's
    // zero pose. These are controller constants, not runtime signals.
    let (r_sk, r_sa) = stance_lever_arms(&walker.full, &roles(Domain::ProsthesisStance))?;

    let (phase_start, tau_rate_plus) = match domain {
        Domain::ProsthesisStance => {
            // The phase is the subsystem's own hip advance, anchored at entry.
            let dp = (r_sk + r_sa) * sub_theta[4] + r_sk * sub_theta[3];
            let dp_rate = (r_sk + r_sa) * sub_theta_dot[4] + r_sk * sub_theta_dot[3];
            let span = dgait.dp_end - dp;
            if span.abs() < 1e-6 {
                return Err(SimError::Config(format!(
                    "subsystem hip advance at entry ({dp:.4}) already at the \
                     domain end value ({:.4}); phase span degenerate",
                    dgait.dp_end
                )));
            }
            (dp, dp_rate / span)
        }
        // The phase is exogenous in swing; anchor the (unused) state phase a
        // unit span away so its construction is well posed, and take the
        // entry phase rate from the recorded signal.
        Domain::ProsthesisSwing => (dgait.dp_end - 1.0, entry_tau_dot),
    };
    if tau_rate_plus <= 1e-9 {
        return Err(SimError::PhaseNotAdvancing {
            tau_dot: tau_rate_plus,
        });
    }

    let mut curves: Vec<Bezier> = dgait.curves();
    for &(row, coord) in tracked_sub_rows(domain) {
        let base = &curves[row];
        let order = base.order() as f64;
        let alpha0 = sub_theta[coord];
        let alpha1 = alpha0 + sub_theta_dot[coord] / (order * tau_rate_plus);
        curves[row] = base.with_start(alpha0, alpha1)?;
    }

    let plan = subsystem_plan(
        &walker.sub,
        r_sk,
        r_sa,
        &PlanInputs {
            domain,
            dgait,
            curves: &curves,
            phase_start,
            gains: gait.gains,
        },
    )?;
    LinearizingLaw::new(plan.outputs, plan.gains)
}

/// The subsystem closed loop over one recorded segment: its own constrained
/// dynamics under the interpolated boundary signals, closed by the
/// reconstructed law.
struct SubLoop<'a> {
    walker: &'a Walker,
    set: ConstraintSet,
    law: LinearizingLaw,
    interp: SegmentInterp<'a>,
}

impl SubLoop<'_> {
    /// Acceleration and input at subsystem state `x = [theta; theta_dot]`
    /// and time `t`.
    fn eval(&self, t: f64, x: &DVector<f64>) -> SimResult<(DVector<f64>, DVector<f64>)> {
        let (th, thd) = split(x);
        let s = self.interp.eval(t);
        let tau_ext = wrench_torque(&self.walker.sub, th[2], &s.wrench);
        let dynamics = constrained_dynamics(&self.walker.sub, &self.set, &th, &thd, Some(&tau_ext))?;
        let tp = TimePhase {
            tau: s.tau,
            tau_dot: s.tau_dot,
            tau_ddot: s.tau_ddot,
        };
        let ctrl = self.law.eval(&dynamics, &th, &thd, Some(&tp))?;
        let accel = dynamics.accel(&ctrl.u);
        Ok((accel, ctrl.u))
    }
}

fn split(x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    (
        DVector::from(x.rows(0, SUB_DOF)),
        DVector::from(x.rows(SUB_DOF, SUB_DOF)),
    )
}

fn stack(theta: &DVector<f64>, theta_dot: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(2 * SUB_DOF);
    x.rows_mut(0, SUB_DOF).copy_from(theta);
    x.rows_mut(SUB_DOF, SUB_DOF).copy_from(theta_dot);
    x
}

/// Max abs difference over a coordinate range of two stacked states.
fn range_dev(a: &DVector<f64>, b: &DVector<f64>, lo: usize, len: usize) -> f64 {
    let mut dev: f64 = 0.0;
    for k in 0..len {
        dev = dev.max((a[lo + k] - b[lo + k]).abs());
        dev = dev.max((a[SUB_DOF + lo + k] - b[SUB_DOF + lo + k]).abs());
    }
    dev
}

/// Compares the replay state and input against one recorded row, folding the
/// deviations into the running report and, when recording, into the sink.
#[allow(clippy::too_many_arguments)]
fn compare_knot(
    walker: &Walker,
    x: &DVector<f64>,
    u: &DVector<f64>,
    row: &TraceRow,
    report: &mut SegmentReport,
    record: bool,
    sink: &mut Vec<ReplayRow>,
) {
    let (rec_th, rec_thd) = sub_state(walker, &row.theta, &row.theta_dot);
    let rec = stack(&rec_th, &rec_thd);
    report.dev_joints = report.dev_joints.max(range_dev(x, &rec, 3, 2));
    report.dev_base = report.dev_base.max(range_dev(x, &rec, 0, 3));
    let du0 = (u[0] - row.u[4]).abs();
    let du1 = (u[1] - row.u[5]).abs();
    report.dev_inputs = report.dev_inputs.max(du0.max(du1));
    report.knots += 1;
    if record {
        let (theta, theta_dot) = split(x);
        sink.push(ReplayRow {
            t: row.t,
            domain: report.domain,
            theta,
            theta_dot,
            u: u.clone(),
            dev_state: (x - &rec).abs(),
            dev_u: DVector::from_vec(vec![du0, du1]),
        });
    }
}

/// Replays one recorded domain pass and reports the deviation from the
/// recording at every recorded sample time.
fn replay_segment(
    walker: &Walker,
    gait: &Gait,
    domain: Domain,
    rows: &[TraceRow],
    opts: &ReplayOptions,
    sink: &mut Vec<ReplayRow>,
) -> SimResult<SegmentReport> {
    let entry = &rows[0];
    let (sub_th, sub_thd) = sub_state(walker, &entry.theta, &entry.theta_dot);
    let dgait = gait.domain(domain);
    let law = rebuild_sub_law(walker, domain, dgait, gait, &sub_th, &sub_thd, entry.tau_dot)?;

    // During stance the prosthetic sole is pinned where the subsystem's own
    // kinematics place it at entry; during swing the subsystem is
    // unconstrained and the socket wrench is all that holds it up.
    let set = match domain {
        Domain::ProsthesisStance => {
            let kin = KinCache::new(&walker.sub, &sub_th);
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

    let subloop = SubLoop {
        walker,
        set,
        law,
        interp: SegmentInterp::new(rows)?,
    };

    let mut report = SegmentReport {
        domain,
        t_start: entry.t,
        t_end: rows[rows.len() - 1].t,
        knots: 0,
        dev_joints: 0.0,
        dev_base: 0.0,
        dev_inputs: 0.0,
    };

    let mut x0 = stack(&sub_th, &sub_thd);
    {
        let (mut th, mut thd) = split(&x0);
        project_state(&walker.sub, &subloop.set, &mut th, &mut thd)?;
        x0 = stack(&th, &thd);
    }
    let (_, u0) = subloop.eval(entry.t, &x0)?;
    compare_knot(walker, &x0, &u0, entry, &mut report, opts.record, sink);

    let mut stepper = Dopri5::new(
        |t, x| {
            let (accel, _) = subloop.eval(t, x)?;
            let (_, thd) = split(x);
            Ok(stack(&thd, &accel))
        },
        entry.t,
        x0,
        opts.ode.clone(),
    )?;

    let t_end = report.t_end;
    let mut knot = 1;
    while stepper.t() < t_end - 1e-12 {
        let dense = stepper.step(t_end)?;
        let t_now = stepper.t();
        let (mut th, mut thd) = split(stepper.state());
        project_state(&walker.sub, &subloop.set, &mut th, &mut thd)?;
        stepper.set_state(t_now, stack(&th, &thd));

        while knot < rows.len() && rows[knot].t <= t_now + 1e-12 {
            let xk = dense.eval(rows[knot].t);
            let (_, uk) = subloop.eval(rows[knot].t, &xk)?;
            compare_knot(walker, &xk, &uk, &rows[knot], &mut report, opts.record, sink);
            knot += 1;
        }
    }

    Ok(report)
}

/// Replays the prosthesis side of a whole recorded walk, segment by segment.
/// Each domain pass restarts from the recorded post-transition state, so the
/// reported deviations measure the continuous-phase agreement; transitions
/// themselves are resolved by the recording.
pub fn replay_subsystem(
    walker: &Walker,
    gait: &Gait,
    trace: &Trace,
    opts: &ReplayOptions,
) -> SimResult<ReplayOutcome> {
    let segments = trace.segments();
    if segments.is_empty() {
        return Err(SimError::Config("trace has no segments to replay".into()));
    }
    let mut out = ReplayOutcome {
        segments: Vec::with_capacity(segments.len()),
        dev_joints: 0.0,
        dev_base: 0.0,
        dev_inputs: 0.0,
        rows: Vec::new(),
    };
    for (domain, range) in segments {
        let report =
            replay_segment(walker, gait, domain, &trace.rows[range], opts, &mut out.rows)?;
        out.dev_joints = out.dev_joints.max(report.dev_joints);
        out.dev_base = out.dev_base.max(report.dev_base);
        out.dev_inputs = out.dev_inputs.max(report.dev_inputs);
        out.segments.push(report);
    }
    Ok(out)
}
