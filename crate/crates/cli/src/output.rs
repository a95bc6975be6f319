use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::failure::Failure;
use crate::manifest::{manifest_path, RunManifest};

/// Writes to stdout; a closed pipe is not an error.
pub fn print_out(s: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(s.as_bytes()).and_then(|_| out.flush());
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("records are always serialisable")
}

/// Shortest text that parses back to the same double; never locale dependent.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

/// Writes `contents` to `out` and the manifest beside it.
pub fn write_with_manifest(out: &Path, contents: &str, mut manifest: RunManifest) -> Result<(), Failure> {
    manifest.outputs = vec![out.display().to_string()];
    write_file(out, contents)?;
    write_file(&manifest_path(out), &(to_json(&manifest) + "\n"))
}

/// A JSON record goes to `out` (with a manifest file) or to stdout with the
/// manifest embedded under `"manifest"`.
pub fn emit(mut record: Value, out: Option<&Path>, manifest: RunManifest) -> Result<(), Failure> {
    match out {
        Some(path) => write_with_manifest(path, &(to_json(&record) + "\n"), manifest),
        None => {
            record["manifest"] = serde_json::to_value(&manifest).expect("manifest is serialisable");
            print_out(&(to_json(&record) + "\n"));
            Ok(())
        }
    }
}
