//! Output formats and run manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Fixed 17-significant-digit scientific notation; parses back to the same f64.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Writes `contents` to `path`, mapping I/O failures to a usage error.
pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    w.write_all(contents.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// CSV with a header row; every cell already formatted.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn json_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

/// Checks up front that an output location can be created, so that long
/// computations do not fail at the very end.
pub fn ensure_writable(path: &Path) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let meta = std::fs::metadata(&dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    if !meta.is_dir() || meta.permissions().readonly() {
        return Err(CliError::Usage(format!("{} is not a writable directory", dir.display())));
    }
    let probe = dir.join(format!(".phase-manifold-probe-{}", std::process::id()));
    File::create(&probe).map_err(|e| CliError::Usage(format!("{} is not writable: {e}", dir.display())))?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

/// `<prefix><suffix>` as a path.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Provenance record written next to every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub full_config: serde_json::Value,
    pub timestamp: String,
    /// Seed of the run (absent for deterministic theory commands).
    pub master_seed: Option<u64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, full_config: serde_json::Value, master_seed: Option<u64>, outputs: &[PathBuf]) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            full_config,
            timestamp: chrono::Utc::now().to_rfc3339(),
            master_seed,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &json_pretty(self))
    }
}
