//! Library surface of the CLI: config ingestion, experiment runners,
//! manifests, and sweeps. The binary in `main.rs` is a thin dispatcher
//! over these so integration tests can drive them directly.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod output;
pub mod sweep;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{CliError, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QGYRO_OUT_DIR";

/// Resolve the output directory: explicit flag, then the config's own
/// `[output] dir`, then the environment, then `./qgyro-out`.
pub fn resolve_out_dir(
    flag: Option<&std::path::Path>,
    config: &ExperimentConfig,
) -> std::path::PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Some(dir) = &config.output.dir {
        return std::path::PathBuf::from(dir);
    }
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            return std::path::PathBuf::from(dir);
        }
    }
    std::path::PathBuf::from("qgyro-out")
}
