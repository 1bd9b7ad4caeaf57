//! Side-by-side metrics of several runs of the same experiment kind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::report::RunReport;

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub kind: String,
    pub labels: Vec<String>,
    /// Metric name and its value in each report, `None` where absent.
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl Comparison {
    /// Difference of report `k` from the first report.
    pub fn diff(&self, row: usize, k: usize) -> Option<f64> {
        let v = &self.rows[row].1;
        Some(v[k]? - v[0]?)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["metric".to_string()];
        h.extend(self.labels.iter().cloned());
        h.extend(self.labels[1..].iter().map(|l| format!("diff:{l}")));
        h
    }

    fn cells(&self, row: usize) -> Vec<String> {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let (name, values) = &self.rows[row];
        let mut out = vec![name.clone()];
        out.extend(values.iter().map(|&v| fmt(v)));
        out.extend((1..values.len()).map(|k| fmt(self.diff(row, k))));
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.header())?;
        for r in 0..self.rows.len() {
            w.write_record(self.cells(r))?;
        }
        w.flush().map_err(|e| HarnessError::io(path, e))
    }

    /// Aligned plain-text table.
    pub fn render(&self) -> String {
        let mut table = vec![self.header()];
        for r in 0..self.rows.len() {
            table.push(
                self.cells(r)
                    .into_iter()
                    .enumerate()
                    .map(|(j, c)| match (j, c.parse::<f64>()) {
                        (0, _) | (_, Err(_)) => c,
                        (_, Ok(v)) => format!("{v:.6}"),
                    })
                    .collect(),
            );
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|j| table.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut s = format!("kind: {}\n", self.kind);
        for row in &table {
            for (j, c) in row.iter().enumerate() {
                let _ = if j == 0 { write!(s, "{c:<w$}", w = widths[j]) } else { write!(s, "  {c:>w$}", w = widths[j]) };
            }
            s.push('\n');
        }
        s
    }
}

/// Loads the reports under `paths` (directories or `report.json` files).
pub fn compare(paths: &[PathBuf]) -> Result<Comparison> {
    if paths.len() < 2 {
        return Err(HarnessError::Usage("compare needs at least two runs".into()));
    }
    let reports = paths.iter().map(|p| RunReport::load(p)).collect::<Result<Vec<_>>>()?;
    let kind = reports[0].0.kind.clone();
    if let Some((r, dir)) = reports.iter().find(|(r, _)| r.kind != kind) {
        return Err(HarnessError::Usage(format!(
            "cannot compare experiment kinds `{kind}` and `{}` ({})",
            r.kind,
            dir.display()
        )));
    }
    let mut labels: Vec<String> = reports
        .iter()
        .map(|(_, dir)| dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| dir.display().to_string()))
        .collect();
    let duplicate = (0..labels.len()).any(|i| labels[i + 1..].contains(&labels[i]));
    if duplicate {
        labels = labels.iter().enumerate().map(|(i, l)| format!("{i}:{l}")).collect();
    }
    let mut names: Vec<&String> = reports.iter().flat_map(|(r, _)| r.metrics.keys()).collect();
    names.sort();
    names.dedup();
    let rows = names
        .into_iter()
        .map(|name| (name.clone(), reports.iter().map(|(r, _)| r.metrics.get(name).copied()).collect()))
        .collect();
    Ok(Comparison { kind, labels, rows })
}

