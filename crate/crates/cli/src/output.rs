//! Atomic file emission and lossless numeric formatting.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Format a float with 17 significant digits so parsing it back is lossless.
pub fn full_precision(value: f64) -> String {
    format!("{value:.16e}")
}

/// A CSV being assembled row by row; written atomically on `finish`.
pub struct CsvFile {
    path: PathBuf,
    buffer: String,
}

impl CsvFile {
    pub fn new(path: PathBuf, header: &str) -> Self {
        Self { path, buffer: format!("{header}\n") }
    }

    pub fn push_row(&mut self, fields: &[String]) {
        self.buffer.push_str(&fields.join(","));
        self.buffer.push('\n');
    }

    /// Write-temp-then-rename so readers never observe a partial file.
    pub fn finish(self) -> Result<PathBuf> {
        write_atomic(&self.path, self.buffer.as_bytes())?;
        Ok(self.path)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .ok_or_else(|| CliError::Validation(format!("{} has no parent directory", path.display())))?;
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default(),
        std::process::id()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
