//! Planar multibody simulation and nonlinear-control workbench for an
//! amputee-prosthesis walker.
//!
//! The crate is layered bottom-up:
//!
//! - [`multibody`]: planar rigid-body trees, analytic kinematics and
//!   dynamics, holonomic constraints with multiplier splits.
//! - [`ctrl`]: input-output feedback linearization for input-affine systems,
//!   including the separable-subsystem machinery and its runtime checks.
//! - [`gait`]: phase variables, polynomial output targets, boundary matching,
//!   and derivative-free refinement.
//! - [`prosthesis`]: the concrete amputee-plus-prosthesis models, the
//!   subsystem extraction, and the measurement transform between them.
//! - [`hybrid`]: the hybrid walking simulation (continuous domains, guards,
//!   impact maps) and trace recording.
//! - [`verify`]: the numerical check battery run by the CLI.

pub mod ctrl;
pub mod error;
pub mod fileio;
pub mod gait;
pub mod hybrid;
pub mod multibody;
pub mod prosthesis;
pub mod verify;

pub use error::{SimError, SimResult};
