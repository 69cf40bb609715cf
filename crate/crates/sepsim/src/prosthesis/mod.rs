//! The amputee walker: anthropometric scaling, model construction, the
//! socket measurement transform, and model files.

pub mod anthro;
pub mod build;
pub mod file;
pub mod transform;

pub use anthro::AnthroTable;
pub use build::{
    build_walker, reference_params, CoordLayout, FrameLayout, HumanParams, ProsthesisParams,
    SegmentInertia, Walker, WalkerParams,
};
pub use file::{load_model, load_walker, save_literal_model, save_walker_params, ModelFile};
pub use transform::{
    measurement_transform, sub_state, wrench_torque, AugmentedState, BoundarySignals,
};
