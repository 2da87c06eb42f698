//! Result-file plumbing: versioned run manifests and CSV/JSON writers.
//!
//! Every command writes a `manifest.json` into its output directory
//! recording how the artifacts were produced (command, config, seed).  The
//! manifest carries a schema version and readers reject versions they do
//! not understand, so stale result directories fail loudly instead of being
//! silently misread.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version stamp written into manifests and JSON summaries.
pub const SCHEMA_VERSION: &str = "1";

/// File name of the per-directory run manifest.
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {found} (this build reads {expected})")]
    SchemaVersion { found: String, expected: String },
}

fn io_err(path: &Path, source: std::io::Error) -> ReportError {
    ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Provenance record accompanying every output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Output schema version; readers reject unknown values.
    pub artifact_version: String,
    /// Subcommand that produced the directory.
    pub command: String,
    /// Config file the run used, as given on the command line.
    pub config_path: String,
    /// Root seed all randomness was derived from.
    pub seed: u64,
    /// Creation timestamp, RFC 3339 UTC.
    pub created_utc: String,
}

impl RunManifest {
    #[must_use]
    pub fn new(command: &str, config_path: &str, seed: u64) -> Self {
        Self {
            artifact_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            config_path: config_path.to_string(),
            seed,
            created_utc: chrono::Utc::now().to_rfc3339(),
        }
    }

    /// Write the manifest into `dir` (created if missing).
    pub fn write(&self, dir: &Path) -> Result<(), ReportError> {
        ensure_dir(dir)?;
        write_json(&dir.join(MANIFEST_FILE), self)
    }

    /// Read a manifest back, rejecting unknown schema versions.
    pub fn read(dir: &Path) -> Result<Self, ReportError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let manifest: Self = serde_json::from_str(&text)?;
        if manifest.artifact_version != SCHEMA_VERSION {
            return Err(ReportError::SchemaVersion {
                found: manifest.artifact_version,
                expected: SCHEMA_VERSION.to_string(),
            });
        }
        Ok(manifest)
    }
}

/// Create a directory (and parents) if it does not exist.
pub fn ensure_dir(dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Serialize rows into a headered CSV file.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Serialize a value into pretty-printed JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}
