//! Binds one walking domain to a closed-loop evaluator.
//!
//! Entering a domain fixes three things at the entry state: the contact
//! constraint stack (stance-sole pin plus socket weld), the reference curves
//! respliced so every position output starts at zero value and zero rate, and
//! the phase anchor. The result evaluates the linearizing law, the resulting
//! accelerations, and the socket reaction wrench at any state inside the
//! domain.

use nalgebra::{DVector, Vector3};

use crate::ctrl::{ControlEval, LinearizingLaw, StatePhase};
use crate::error::SimResult;
use crate::gait::{full_plan, match_entry, Bezier, Domain, Gait, PlanInputs};
use crate::multibody::{constrained_dynamics, Constraint, ConstraintSet, FrameId, KinCache, Pose};
use crate::prosthesis::Walker;

/// Index of the socket weld inside each domain's constraint stack; the
/// stance-sole pin always sits at index 0.
pub const WELD_INDEX: usize = 1;

/// One domain of the walking cycle, bound to its entry state.
pub struct DomainSetup {
    pub domain: Domain,
    /// Stance-sole pin (index 0) and socket weld (index 1).
    pub set: ConstraintSet,
    /// World pose the stance sole is pinned at.
    pub pin_target: Pose,
    /// Six-output linearizing law, curves already respliced onto entry.
    pub law: LinearizingLaw,
    /// Phase normalization shared by the position rows.
    pub phase: StatePhase,
    /// Law rows that depend only on prosthesis-side quantities.
    pub s_rows: Vec<usize>,
    /// Matched reference curves in canonical tracked order, kept so the
    /// prosthesis-side replica can be built against the same references.
    pub curves: Vec<Bezier>,
    /// Hip advance at entry (the phase anchor).
    pub phase_start: f64,
    /// Phase rate at entry.
    pub tau_rate_plus: f64,
    /// Stance-leg lever arms behind the phase weights.
    pub r_sk: f64,
    pub r_sa: f64,
    pub stance_sole: FrameId,
    pub swing_sole: FrameId,
    /// Entry state and time the curves were matched to.
    pub theta_plus: DVector<f64>,
    pub theta_dot_plus: DVector<f64>,
    pub t_entry: f64,
}

/// Sole frames filling the stance/swing roles in a domain.
pub fn sole_frames(walker: &Walker, domain: Domain) -> (FrameId, FrameId) {
    match domain {
        Domain::ProsthesisStance => (walker.frames.r_sole, walker.frames.l_sole),
        Domain::ProsthesisSwing => (walker.frames.l_sole, walker.frames.r_sole),
    }
}

/// Builds the closed-loop setup for `domain` at the post-transition state.
/// The stance sole is pinned wherever it currently is, so a transition
/// captures the touchdown pose as-is.
pub fn enter_domain(
    walker: &Walker,
    gait: &Gait,
    domain: Domain,
    t_entry: f64,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
) -> SimResult<DomainSetup> {
    let (stance_sole, swing_sole) = sole_frames(walker, domain);
    let dgait = gait.domain(domain);
    let nominal = dgait.curves();
    let entry = match_entry(&walker.full, domain, dgait, &nominal, theta, theta_dot)?;
    let plan = full_plan(
        &walker.full,
        &PlanInputs {
            domain,
            dgait,
            curves: &entry.curves,
            phase_start: entry.phase_start,
            gains: gait.gains,
        },
    )?;

    let kin = KinCache::new(&walker.full, theta);
    let pin_target = kin.frame_pose(stance_sole);
    let set = ConstraintSet::new(
        &walker.full,
        vec![
            Constraint::PosePin {
                frame: stance_sole,
                target: pin_target,
            },
            Constraint::WeldLocal {
                child: walker.frames.sock_child,
                anchor: walker.frames.sock_anchor,
            },
        ],
    )?;
    let law = LinearizingLaw::new(plan.outputs, plan.gains)?;

    Ok(DomainSetup {
        domain,
        set,
        pin_target,
        law,
        phase: plan.phase,
        s_rows: plan.s_rows,
        curves: entry.curves,
        phase_start: entry.phase_start,
        tau_rate_plus: entry.tau_rate_plus,
        r_sk: plan.r_sk,
        r_sa: plan.r_sa,
        stance_sole,
        swing_sole,
        theta_plus: theta.clone(),
        theta_dot_plus: theta_dot.clone(),
        t_entry,
    })
}

/// Closed-loop evaluation at one state.
pub struct LoopEval {
    pub ctrl: ControlEval,
    pub accel: DVector<f64>,
    /// Socket weld multiplier at the solved input: force pair in the socket
    /// frame axes and a torque.
    pub wrench: Vector3<f64>,
    /// Phase rate implied by the current velocity.
    pub tau_dot: f64,
    /// Phase acceleration along the closed-loop flow.
    pub tau_ddot: f64,
}

impl DomainSetup {
    /// Evaluates control, accelerations, and the socket wrench at
    /// `(theta, theta_dot)`.
    pub fn eval(
        &self,
        walker: &Walker,
        theta: &DVector<f64>,
        theta_dot: &DVector<f64>,
    ) -> SimResult<LoopEval> {
        let dynamics = constrained_dynamics(&walker.full, &self.set, theta, theta_dot, None)?;
        let ctrl = self.law.eval(&dynamics, theta, theta_dot, None)?;
        let accel = dynamics.accel(&ctrl.u);
        let lambda = dynamics.multiplier(&ctrl.u);
        let r = self.set.row_range(WELD_INDEX);
        let wrench = Vector3::new(lambda[r.start], lambda[r.start + 1], lambda[r.start + 2]);
        let grad = self.phase.grad();
        let tau_dot = grad.dot(theta_dot);
        let tau_ddot = grad.dot(&accel);
        Ok(LoopEval {
            ctrl,
            accel,
            wrench,
            tau_dot,
            tau_ddot,
        })
    }

    /// Right-hand side of the closed-loop flow for the stacked state
    /// `x = [theta; theta_dot]`.
    pub fn rhs(&self, walker: &Walker, x: &DVector<f64>) -> SimResult<DVector<f64>> {
        let eta = walker.full.dof();
        let theta = x.rows(0, eta).into_owned();
        let theta_dot = x.rows(eta, eta).into_owned();
        let ev = self.eval(walker, &theta, &theta_dot)?;
        let mut out = DVector::zeros(2 * eta);
        out.rows_mut(0, eta).copy_from(&theta_dot);
        out.rows_mut(eta, eta).copy_from(&ev.accel);
        Ok(out)
    }

    /// Height of the swing sole above the ground plane at `theta`.
    pub fn swing_sole_height(&self, walker: &Walker, theta: &DVector<f64>) -> f64 {
        let kin = KinCache::new(&walker.full, theta);
        kin.frame_pose(self.swing_sole).z
    }

    /// Phase value at `theta`.
    pub fn tau(&self, theta: &DVector<f64>) -> f64 {
        self.phase.tau(theta)
    }
}
