//! Model files: one tag, two bodies.
//!
//! A model file starts with `sepsim-model v1` and carries either
//!
//! * a parametric walker: `[human]` and `[prosthesis.*]` tables scaled into
//!   the full amputee model plus its prosthesis-side companion, or
//! * a literal mechanism: `[[joint]]` / `[[frame]]` tables assembled as
//!   written (useful for hand-built test rigs).
//!
//! The table keys present decide the form.

use std::path::Path;

use crate::error::{SimError, SimResult};
use crate::fileio;
use crate::multibody::file::{model_from_table, model_to_toml};
use crate::multibody::RobotModel;
use crate::prosthesis::{build_walker, Walker, WalkerParams};
use serde::{Deserialize, Serialize};

/// Contents of a model file.
pub enum ModelFile {
    /// Parametric amputee walker (full + prosthesis-side models).
    Walker(Box<Walker>),
    /// Literal mechanism, usable with the library but not the walking
    /// commands.
    Literal(RobotModel),
}

#[derive(Debug, Serialize, Deserialize)]
struct RawWalkerFile {
    #[serde(default = "default_gravity")]
    gravity: f64,
    human: crate::prosthesis::HumanParams,
    prosthesis: crate::prosthesis::ProsthesisParams,
}

fn default_gravity() -> f64 {
    9.81
}

/// Loads a model file, dispatching on its body form.
pub fn load_model(path: &Path) -> SimResult<ModelFile> {
    let body = fileio::read_tagged(path, fileio::MODEL_TAG)?;
    let table: toml::Table = body
        .parse()
        .map_err(|e| fileio::schema_err(path, e))?;
    if table.contains_key("human") {
        let raw: RawWalkerFile = table
            .try_into()
            .map_err(|e| fileio::schema_err(path, e))?;
        let walker = build_walker(WalkerParams {
            human: raw.human,
            prosthesis: raw.prosthesis,
            gravity: raw.gravity,
        })?;
        Ok(ModelFile::Walker(Box::new(walker)))
    } else if table.contains_key("joint") {
        Ok(ModelFile::Literal(model_from_table(table)?))
    } else {
        Err(SimError::Schema(format!(
            "{}: body has neither [human] nor [[joint]] tables",
            path.display()
        )))
    }
}

/// Convenience for commands that need the walker form.
pub fn load_walker(path: &Path) -> SimResult<Walker> {
    match load_model(path)? {
        ModelFile::Walker(w) => Ok(*w),
        ModelFile::Literal(_) => Err(SimError::Config(format!(
            "{}: literal mechanism files cannot drive the walking commands; \
             a parametric [human]/[prosthesis] model is required",
            path.display()
        ))),
    }
}

/// Writes a parametric walker model file.
pub fn save_walker_params(path: &Path, params: &WalkerParams) -> SimResult<()> {
    let raw = RawWalkerFile {
        gravity: params.gravity,
        human: params.human.clone(),
        prosthesis: params.prosthesis,
    };
    let body = toml::to_string(&raw)
        .map_err(|e| SimError::Config(format!("model serialization: {e}")))?;
    fileio::write_tagged(path, fileio::MODEL_TAG, &body)
}

/// Writes a literal mechanism model file.
pub fn save_literal_model(path: &Path, model: &RobotModel) -> SimResult<()> {
    fileio::write_tagged(path, fileio::MODEL_TAG, &model_to_toml(model)?)
}
