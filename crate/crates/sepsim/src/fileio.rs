//! Shared plumbing for the on-disk formats.
//!
//! Every file this crate reads or writes starts with a one-line type tag
//! (for example `sepsim-model v1`) followed by a TOML body. The tag makes a
//! mis-passed file fail fast with a clear message instead of a confusing
//! TOML deserialization error.

use crate::error::{SimError, SimResult};
use std::path::Path;

pub const MODEL_TAG: &str = "sepsim-model v1";
pub const GAIT_TAG: &str = "sepsim-gait v1";

/// Reads a tagged file and returns the TOML body after checking the tag line.
pub fn read_tagged(path: &Path, expected_tag: &str) -> SimResult<String> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.splitn(2, '\n');
    let first = lines.next().unwrap_or("").trim_end_matches('\r').trim();
    if first != expected_tag {
        return Err(SimError::Schema(format!(
            "{}: expected first line `{}`, found `{}`",
            path.display(),
            expected_tag,
            first
        )));
    }
    Ok(lines.next().unwrap_or("").to_string())
}

/// Writes a tagged file: the tag line, then the TOML body.
pub fn write_tagged(path: &Path, tag: &str, body: &str) -> SimResult<()> {
    let mut text = String::with_capacity(tag.len() + 1 + body.len());
    text.push_str(tag);
    text.push('\n');
    text.push_str(body);
    std::fs::write(path, text)?;
    Ok(())
}

/// Maps a TOML deserialization error to a schema error with file context.
pub fn schema_err(path: &Path, err: impl std::fmt::Display) -> SimError {
    SimError::Schema(format!("{}: {}", path.display(), err))
}
