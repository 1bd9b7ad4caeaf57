use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::{HarnessError, Result};

/// Metric name to value. Keys are stable across versions of the schema.
pub type Metrics = BTreeMap<String, f64>;

/// Wall-clock facts, kept apart from everything that must be reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub kind: String,
    pub metrics: Metrics,
    /// Role to file name, relative to the directory holding the report.
    pub files: BTreeMap<String, String>,
    pub config: ExperimentConfig,
    pub timing: Timing,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig, metrics: Metrics, files: BTreeMap<String, String>, timing: Timing) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: config.experiment.kind().to_string(),
            metrics,
            files,
            config: config.clone(),
            timing,
        }
    }

    /// Reads `report.json`, given the file or the directory containing it.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let file = if path.is_dir() { path.join("report.json") } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&file).map_err(|e| HarnessError::io(&file, e))?;
        let report: RunReport = serde_json::from_str(&text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Usage(format!(
                "{}: unsupported report schema {}",
                file.display(),
                report.schema_version
            )));
        }
        let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((report, dir))
    }

    /// Absolute path of a recorded file, if the role exists.
    pub fn file(&self, dir: &Path, role: &str) -> Option<PathBuf> {
        self.files.get(role).map(|name| dir.join(name))
    }

    pub fn missing_files(&self, dir: &Path) -> Vec<PathBuf> {
        self.files.values().map(|n| dir.join(n)).filter(|p| !p.is_file()).collect()
    }
}
