//! Concurrent execution of independent experiment configs with a
//! deterministic aggregated manifest.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::manifest::{sha256_hex, OutputEntry};
use crate::{experiments, output};

pub const SWEEP_MANIFEST_NAME: &str = "sweep_manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub config_path: String,
    /// Hash of the config file contents; entries are sorted by this, so
    /// aggregation order does not depend on completion order.
    pub config_sha256: String,
    pub out_dir: String,
    /// "ok" or the error message.
    pub status: String,
    pub outputs: Vec<OutputEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepManifest {
    pub artifact_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub parallelism: usize,
    pub entries: Vec<SweepEntry>,
}

/// Run each config file, up to `parallelism` at a time. Child outputs go to
/// each config's own `[output] dir`, or to `<base_out>/<file stem>` when the
/// config does not name one. Returns the manifest and whether any child
/// failed.
pub fn sweep(
    config_paths: &[PathBuf],
    parallelism: usize,
    base_out: &Path,
) -> Result<(SweepManifest, bool)> {
    if config_paths.is_empty() {
        return Err(CliError::Validation("sweep needs at least one --config".into()));
    }
    let started_at = chrono::Utc::now().to_rfc3339();
    let width = parallelism.max(1).min(config_paths.len());

    // Parse and plan everything up front so validation failures are
    // reported per config without starting any computation.
    struct Job {
        path: PathBuf,
        hash: String,
        out_dir: PathBuf,
        config: Result<ExperimentConfig>,
    }
    let jobs: Vec<Job> = config_paths
        .iter()
        .map(|path| {
            let (hash, config) = match std::fs::read_to_string(path) {
                Ok(text) => (sha256_hex(text.as_bytes()), ExperimentConfig::from_toml(&text)),
                Err(e) => (String::from("unreadable"), Err(CliError::from(e))),
            };
            let out_dir = config
                .as_ref()
                .ok()
                .and_then(|c| c.output.dir.clone())
                .map(PathBuf::from)
                .unwrap_or_else(|| {
                    let stem = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "config".into());
                    base_out.join(stem)
                });
            Job { path: path.clone(), hash, out_dir, config }
        })
        .collect();

    let queue: Mutex<VecDeque<usize>> = Mutex::new((0..jobs.len()).collect());
    let results: Mutex<Vec<Option<SweepEntry>>> = Mutex::new(vec![None; jobs.len()]);

    std::thread::scope(|scope| {
        for _ in 0..width {
            scope.spawn(|| loop {
                let index = match queue.lock().unwrap().pop_front() {
                    Some(index) => index,
                    None => break,
                };
                let job = &jobs[index];
                let entry = match &job.config {
                    Ok(config) => match experiments::run(config, &job.out_dir) {
                        Ok(outcome) => SweepEntry {
                            config_path: job.path.display().to_string(),
                            config_sha256: job.hash.clone(),
                            out_dir: job.out_dir.display().to_string(),
                            status: "ok".into(),
                            outputs: collect(&job.out_dir, &outcome.outputs),
                        },
                        Err(e) => failed_entry(job.path.as_path(), &job.hash, &job.out_dir, &e),
                    },
                    Err(e) => failed_entry(job.path.as_path(), &job.hash, &job.out_dir, e),
                };
                results.lock().unwrap()[index] = Some(entry);
            });
        }
    });

    let mut entries: Vec<SweepEntry> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|entry| entry.expect("every job produces an entry"))
        .collect();
    entries.sort_by(|a, b| a.config_sha256.cmp(&b.config_sha256));
    let any_failed = entries.iter().any(|e| e.status != "ok");

    let manifest = SweepManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        parallelism: width,
        entries,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Validation(format!("sweep manifest serialization: {e}")))?;
    output::write_atomic(&base_out.join(SWEEP_MANIFEST_NAME), json.as_bytes())?;
    Ok((manifest, any_failed))
}

fn collect(dir: &Path, files: &[PathBuf]) -> Vec<OutputEntry> {
    crate::manifest::collect_outputs(dir, files).unwrap_or_default()
}

fn failed_entry(path: &Path, hash: &str, out_dir: &Path, error: &CliError) -> SweepEntry {
    SweepEntry {
        config_path: path.display().to_string(),
        config_sha256: hash.to_string(),
        out_dir: out_dir.display().to_string(),
        status: format!("error: {error}"),
        outputs: Vec::new(),
    }
}
