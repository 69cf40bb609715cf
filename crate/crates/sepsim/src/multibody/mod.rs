//! Planar rigid-body trees: model description, kinematics, dynamics,
//! holonomic constraints.

pub mod constraint;
pub mod dynamics;
pub mod file;
pub mod kinematics;
pub mod model;

pub use constraint::{
    constrained_dynamics, forward_dynamics, forward_dynamics_kkt, project_state, ConstrainedDynamics,
    Constraint, ConstraintData, ConstraintSet,
};
pub use dynamics::{bias_forces, coriolis_matrix, energy, gravity_vector, mass_matrix, DynTerms};
pub use kinematics::{forward_kinematics, frame_jacobian, KinCache};
pub use model::{FrameDef, FrameId, Joint, JointKind, LinkParams, Pose, RobotModel};
