//! Run manifests: every CLI invocation records its resolved configuration,
//! inputs, output hashes, and duration next to its outputs, so any artifact
//! can be traced back to the exact command that produced it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use uco_core::{Error, Result};

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub config: C,
    pub inputs: Vec<String>,
    pub outputs: Vec<OutputRecord>,
    pub duration_ms: u128,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Hashes the outputs and writes the manifest JSON to `manifest_path`.
pub fn write<C: Serialize>(
    manifest_path: &Path,
    command: &'static str,
    config: &C,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    started: Instant,
) -> Result<()> {
    let output_records = outputs
        .iter()
        .map(|p| {
            Ok(OutputRecord {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: output_records,
        duration_ms: started.elapsed().as_millis(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::invalid(format!("manifest serialization: {e}")))?;
    std::fs::write(manifest_path, json + "\n").map_err(|e| Error::io(manifest_path, e))
}
