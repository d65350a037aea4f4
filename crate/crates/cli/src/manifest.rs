//! Run manifests: config echo, timestamps, and per-output checksums, plus
//! the self-check that re-verifies stored checksums against file contents.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ToleranceSection};
use crate::error::{CliError, Result};
use crate::output;

pub const MANIFEST_NAME: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub experiment: String,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub tolerances: ToleranceSection,
    /// The resolved configuration, echoed verbatim.
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(hex, "{byte:02x}").expect("hex formatting");
    }
    hex
}

/// Hash and size every emitted file, relative to `dir`.
pub fn collect_outputs(dir: &Path, files: &[PathBuf]) -> Result<Vec<OutputEntry>> {
    let mut entries = Vec::with_capacity(files.len());
    for file in files {
        let bytes = fs::read(file)?;
        let relative = file
            .strip_prefix(dir)
            .map_err(|_| CliError::Validation(format!("{} escapes {}", file.display(), dir.display())))?;
        entries.push(OutputEntry {
            path: relative.to_string_lossy().into_owned(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
    }
    Ok(entries)
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Validation(format!("manifest serialization: {e}")))?;
    output::write_atomic(&path, json.as_bytes())?;
    Ok(path)
}

/// Re-verify a manifest: every listed output must exist and hash to the
/// stored checksum. Checksum mismatches are integrity (numerical-class)
/// failures; missing or unreadable files are validation failures.
pub fn self_check(manifest_path: &Path) -> Result<usize> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("manifest parse error: {e}")))?;
    let base = manifest_path
        .parent()
        .ok_or_else(|| CliError::Validation("manifest has no parent directory".into()))?;
    let mut mismatches = Vec::new();
    for entry in &manifest.outputs {
        let bytes = fs::read(base.join(&entry.path))?;
        let found = sha256_hex(&bytes);
        if found != entry.sha256 || bytes.len() as u64 != entry.bytes {
            mismatches.push(entry.path.clone());
        }
    }
    if !mismatches.is_empty() {
        return Err(CliError::Numerical(format!(
            "checksum mismatch for: {}",
            mismatches.join(", ")
        )));
    }
    Ok(manifest.outputs.len())
}
