//! Input-output feedback linearization and its verification checks.

pub mod affine;
pub mod checks;
pub mod law;
pub mod output;

pub use affine::{directional_derivative, fd_partial, AffineSystem};
pub use checks::{
    check_locality, check_separability, compare_fields, scaled_residual, scaled_residual_mat,
    CheckReport,
};
pub use law::{ControlEval, LinearizingLaw, RowGains, COND_LIMIT};
pub use output::{
    ConstantTarget, MechOutput, PhaseSource, PositionOutput, RowEval, ScalarCurve, StatePhase,
    TimePhase, VelocityOutput,
};
