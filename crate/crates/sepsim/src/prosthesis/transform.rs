//! Maps full-model states to prosthesis-side quantities.
//!
//! The prosthesis-side controller sees only: its own joint state, the pose
//! and velocity of the socket frame, and the interaction wrench transmitted
//! through the socket. All three are functions of the full state (the wrench
//! also of the applied input, through the constraint forces), which is what
//! makes replaying the prosthesis side from recorded signals meaningful.

use nalgebra::{DVector, Vector3};

use crate::error::SimResult;
use crate::multibody::{constrained_dynamics, ConstraintSet, KinCache, Pose, RobotModel};
use crate::prosthesis::Walker;

/// Signals crossing the socket cut, as the prosthesis side measures them.
#[derive(Debug, Clone)]
pub struct BoundarySignals {
    /// Socket frame pose in the world.
    pub base_pose: Pose,
    /// Socket frame velocity (xdot, zdot, phidot).
    pub base_vel: Vector3<f64>,
    /// Interaction wrench applied to the prosthesis at the socket frame:
    /// force in socket-frame axes, then the planar moment.
    pub wrench: Vector3<f64>,
}

/// A full state re-expressed for the prosthesis-side model.
#[derive(Debug, Clone)]
pub struct AugmentedState {
    pub signals: BoundarySignals,
    /// Prosthesis-side configuration: socket pose then knee and ankle.
    pub sub_theta: DVector<f64>,
    /// Matching velocities.
    pub sub_theta_dot: DVector<f64>,
}

/// Kinematic part of the prosthesis-side view: socket frame pose and
/// velocity from the full state, stacked with the prosthetic joint state
/// into subsystem coordinates.
pub fn sub_state(
    walker: &Walker,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let kin = KinCache::new(&walker.full, theta);
    let base_pose = kin.frame_pose(walker.frames.sock_child);
    let v = kin.frame_velocity(walker.frames.sock_child, theta_dot);

    let c = &walker.coords;
    let sub_theta = DVector::from_vec(vec![
        base_pose.x,
        base_pose.z,
        base_pose.phi,
        theta[c.pk],
        theta[c.pa],
    ]);
    let sub_theta_dot = DVector::from_vec(vec![v[0], v[1], v[2], theta_dot[c.pk], theta_dot[c.pa]]);
    (sub_theta, sub_theta_dot)
}

/// Computes the prosthesis-side view of a full-model state. `set` is the
/// active constraint stack, `weld_index` the position of the socket
/// attachment constraint within it, and `u_applied` the input at which the
/// interaction wrench is measured.
pub fn measurement_transform(
    walker: &Walker,
    set: &ConstraintSet,
    weld_index: usize,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
    u_applied: &DVector<f64>,
) -> SimResult<AugmentedState> {
    let dynamics = constrained_dynamics(&walker.full, set, theta, theta_dot, None)?;
    let lambda = dynamics.multiplier(u_applied);
    let r = set.row_range(weld_index);
    let wrench = Vector3::new(lambda[r.start], lambda[r.start + 1], lambda[r.start + 2]);

    let (sub_theta, sub_theta_dot) = sub_state(walker, theta, theta_dot);
    let base_pose = Pose {
        x: sub_theta[0],
        z: sub_theta[1],
        phi: sub_theta[2],
    };
    let base_vel = Vector3::new(sub_theta_dot[0], sub_theta_dot[1], sub_theta_dot[2]);

    Ok(AugmentedState {
        signals: BoundarySignals {
            base_pose,
            base_vel,
            wrench,
        },
        sub_theta,
        sub_theta_dot,
    })
}

/// Generalized force the measured wrench applies to the prosthesis-side
/// model: the local force rotated to world axes acts on the base translation
/// coordinates, the moment on the base rotation; the joints feel nothing
/// directly.
pub fn wrench_torque(sub: &RobotModel, base_phi: f64, wrench: &Vector3<f64>) -> DVector<f64> {
    let (s, c) = base_phi.sin_cos();
    let mut tau = DVector::zeros(sub.dof());
    tau[0] = c * wrench[0] - s * wrench[1];
    tau[1] = s * wrench[0] + c * wrench[1];
    tau[2] = wrench[2];
    tau
}
