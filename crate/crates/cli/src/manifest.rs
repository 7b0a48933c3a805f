//! Run manifests: every command writes the fully resolved configuration next
//! to its outputs, so a run can be reproduced from the recorded arguments
//! alone (bit-identically for the analytic backend, and given the same seed
//! for noisy grids).

use std::path::Path;

use serde::Serialize;

use crate::commands::CliError;

#[derive(Serialize)]
pub struct RunManifest<A: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// The resolved arguments, defaults included.
    pub args: A,
    pub outputs: Vec<String>,
}

pub fn write_manifest<A: Serialize>(
    command: &'static str,
    args: &A,
    outputs: &[&Path],
    path: &Path,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        tool: "shapeflow",
        version: env!("CARGO_PKG_VERSION"),
        command,
        args,
        outputs: outputs
            .iter()
            .map(|p| p.to_string_lossy().into_owned())
            .collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(path, text + "\n").map_err(CliError::from)
}
