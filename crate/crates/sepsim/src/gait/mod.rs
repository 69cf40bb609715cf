//! Gait data, reference curves, and per-domain output construction.

pub mod bezier;
pub mod boundary;
pub mod data;
pub mod outputs;
pub mod refine;

pub use bezier::Bezier;
pub use boundary::{match_entry, EntryMatch};
pub use data::{Domain, DomainGait, Gains, Gait, CURVE_COEFFS, NUM_TRACKED};
pub use refine::{
    pack_gait, refine_scales, simplex_minimize, unpack_gait, SimplexOutcome, REFINE_DIM,
};
pub use outputs::{
    full_plan, hip_advance_weights, roles, stance_lever_arms, subsystem_plan, OutputPlan,
    PlanInputs, Roles,
};
