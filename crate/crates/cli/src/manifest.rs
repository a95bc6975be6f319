use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use taboo_hitting::{validate_model, QuadratureConfig, RawModel, SimConfig, TimeGrid, WalkModel};

use crate::failure::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub z: Option<Vec<i64>>,
}

/// Everything needed to reproduce a run. Written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Command line after the program name; `taboo replay` re-runs it.
    pub args: Vec<String>,
    pub model_file: Option<String>,
    pub model: Option<RawModel>,
    pub query: Option<QueryRecord>,
    pub grid: Option<TimeGrid>,
    pub sim: Option<SimConfig>,
    pub quadrature: Option<QuadratureConfig>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    /// Diagnostics raised during the run, e.g. `step_too_coarse`.
    pub flags: Vec<String>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        RunManifest {
            command: command.into(),
            args,
            model_file: None,
            model: None,
            query: None,
            grid: None,
            sim: None,
            quadrature: None,
            seed: None,
            outputs: Vec::new(),
            flags: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn with_model(mut self, path: &Path, model: &WalkModel) -> Self {
        self.model_file = Some(path.display().to_string());
        self.model = Some(model.to_raw());
        self
    }
}

/// `out.csv` → `out.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Arguments of the recorded run, after checking that the model file still
/// holds the recorded model.
pub fn replay_args(path: &Path) -> Result<Vec<String>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: not a run manifest: {e}", path.display())))?;
    if let (Some(file), Some(recorded)) = (&manifest.model_file, &manifest.model) {
        let current = WalkModel::from_file(file)?;
        if validate_model(recorded)? != current {
            return Err(Failure {
                kind: "ModelFile".into(),
                message: format!("{file} no longer holds the model recorded in the manifest"),
                exit: crate::failure::EXIT_INPUT,
            });
        }
    }
    Ok(manifest.args)
}
