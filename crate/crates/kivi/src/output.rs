//! Files written by a run. Everything except `timing.csv` and the
//! `timing` field of `report.json` is a deterministic function of the
//! config.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use kivi_core::autodiff::Param;
use kivi_core::linalg::Matrix;
use kivi_core::vi::Trace;
use serde::Serialize;

use crate::error::{HarnessError, Result};

/// An output directory plus the files recorded in it so far, keyed by role.
pub struct Outputs {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }

    fn record(&mut self, key: &str, name: &str) -> PathBuf {
        self.files.insert(key.to_string(), name.to_string());
        self.path(name)
    }

    pub fn trace(&mut self, key: &str, name: &str, trace: &Trace) -> Result<()> {
        let path = self.record(key, name);
        let mut w = csv::Writer::from_path(&path)?;
        for row in trace {
            w.serialize(row)?;
        }
        if trace.is_empty() {
            w.write_record(["iteration", "elbo", "kl", "reconstruction"])?;
        }
        w.flush().map_err(|e| HarnessError::io(&path, e))
    }

    pub fn timing(&mut self, key: &str, name: &str, millis: &[f64]) -> Result<()> {
        let path = self.record(key, name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["iteration", "wall_time_ms"])?;
        for (i, ms) in millis.iter().enumerate() {
            w.write_record([i.to_string(), format!("{ms:.3}")])?;
        }
        w.flush().map_err(|e| HarnessError::io(&path, e))
    }

    /// Rows of `samples` under columns `z0, z1, …`.
    pub fn samples(&mut self, key: &str, name: &str, samples: &Matrix) -> Result<()> {
        let path = self.record(key, name);
        write_matrix(&path, samples, "z")
    }

    pub fn table(&mut self, key: &str, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let path = self.record(key, name);
        write_table(&path, header, rows)
    }

    /// Parameter values as big-endian hex of their IEEE-754 bits, so a
    /// checkpoint restores bit for bit.
    pub fn checkpoint(&mut self, key: &str, name: &str, params: &[&Param]) -> Result<()> {
        let path = self.record(key, name);
        let map: BTreeMap<String, Vec<String>> = params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (
                    format!("{i:03}:{}", p.name()),
                    p.value().iter().map(|v| format!("{:016x}", v.to_bits())).collect(),
                )
            })
            .collect();
        write_json(&path, &map)
    }

    pub fn json<T: Serialize>(&mut self, key: &str, name: &str, value: &T) -> Result<()> {
        let path = self.record(key, name);
        write_json(&path, value)
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_matrix(path: &Path, m: &Matrix, prefix: &str) -> Result<()> {
    let header: Vec<String> = (0..m.cols()).map(|j| format!("{prefix}{j}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = m.row_iter().map(<[f64]>::to_vec).collect();
    write_table(path, &header, &rows)
}

/// Reads a numeric CSV with a header row.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let mut r = csv::Reader::from_path(path)?;
    let cols = r.headers()?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for record in r.records() {
        let record = record?;
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| HarnessError::Usage(format!("{}: `{field}` is not a number", path.display())))?;
            data.push(v);
        }
        rows += 1;
    }
    Ok(Matrix::from_vec(rows, cols, data)?)
}

/// Parses a checkpoint written by [`Outputs::checkpoint`].
pub fn read_checkpoint(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(&text)?;
    raw.into_iter()
        .map(|(k, v)| {
            let values = v
                .iter()
                .map(|h| u64::from_str_radix(h, 16).map(f64::from_bits))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
            Ok((k, values))
        })
        .collect()
}
