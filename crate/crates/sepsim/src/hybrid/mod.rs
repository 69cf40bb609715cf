//! Hybrid closed-loop simulation: domain binding, integration, touchdown
//! events, impacts, and trace recording.

pub mod controller;
pub mod impact;
pub mod ode;
pub mod refine;
pub mod replay;
pub mod sim;
pub mod trace;

pub use controller::{enter_domain, sole_frames, DomainSetup, LoopEval, WELD_INDEX};
pub use impact::{plastic_impact, ImpactOutcome};
pub use ode::{bisect_event, DenseStep, Dopri5, OdeOptions};
pub use refine::{refine_gait, RefineOptions, RefineOutcome};
pub use replay::{replay_subsystem, ReplayOptions, ReplayOutcome, ReplayRow, SegmentReport};
pub use sim::{initial_state, poincare_residual, run_walk, touchdown_stack, SimOptions, WalkOutcome};
pub use trace::{
    write_impacts_csv, ImpactRecord, InterpSample, SegmentInterp, Trace, TraceRow, TRACE_DOF,
    TRACE_INPUTS, TRACE_OUTPUTS,
};
