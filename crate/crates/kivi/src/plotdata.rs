//! Plot-ready CSV files derived from a run's sample dumps.
//!
//! One-dimensional dumps become histograms, two-dimensional dumps become
//! scatter files. Mixture runs also get the true density on a grid and
//! logistic regression runs get the unnormalized log-posterior on a grid.

use std::path::{Path, PathBuf};

use kivi_core::linalg::Matrix;

use crate::config::Experiment;
use crate::error::{HarnessError, Result};
use crate::experiments::{blr_model_from_table, mixture_plot_range};
use crate::output::{read_matrix, write_table};
use crate::report::RunReport;
use crate::stats::Histogram;

pub const HISTOGRAM_BINS: usize = 100;
pub const DENSITY_POINTS: usize = 501;

/// Subdirectory of the run directory receiving the files.
pub const PLOT_DIR: &str = "plotdata";

const SAMPLE_ROLES: [&str; 4] = ["samples", "mean_field_samples", "planar_flow_samples", "hmc_samples"];

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

/// Histogram whose range covers both `range` and every value, so no draw
/// is dropped.
pub fn histogram(values: &[f64], range: (f64, f64), bins: usize) -> Histogram {
    let lo = values.iter().copied().fold(range.0, f64::min);
    let hi = values.iter().copied().fold(range.1, f64::max);
    Histogram::new(values, lo, hi, bins)
}

pub fn histogram_rows(h: &Histogram) -> Vec<Vec<f64>> {
    h.densities()
        .iter()
        .enumerate()
        .map(|(b, &d)| {
            let (lo, hi) = h.edges(b);
            vec![lo, hi, h.counts[b] as f64, d]
        })
        .collect()
}

/// Square grid enclosing every draw of every 2-D dump, with a margin.
fn grid_bounds(dumps: &[Matrix]) -> [(f64, f64); 2] {
    let mut b = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for m in dumps {
        for r in m.row_iter() {
            for j in 0..2 {
                b[j] = (b[j].0.min(r[j]), b[j].1.max(r[j]));
            }
        }
    }
    b.map(|(lo, hi)| {
        let pad = 0.25 * (hi - lo).max(1e-3);
        (lo - pad, hi + pad)
    })
}

/// Writes the plot data for the report at `path` (a `report.json` or its
/// directory) and returns the files written.
pub fn export_plotdata(path: &Path) -> Result<Vec<PathBuf>> {
    let (report, dir) = RunReport::load(path)?;
    let mut dumps = Vec::new();
    for role in SAMPLE_ROLES {
        if let Some(file) = report.file(&dir, role) {
            if !file.is_file() {
                return Err(HarnessError::Usage(format!("missing sample dump {}", file.display())));
            }
            dumps.push((role, read_matrix(&file)?));
        }
    }
    if dumps.is_empty() {
        return Err(HarnessError::Usage(format!("{}: the report lists no sample dumps", dir.display())));
    }
    let dim = dumps[0].1.cols();
    if dim > 2 || dumps.iter().any(|(_, m)| m.cols() != dim) {
        return Err(HarnessError::Usage(format!(
            "{}: plot data covers 1-D and 2-D samples, found {dim} columns",
            dir.display()
        )));
    }
    let out = dir.join(PLOT_DIR);
    std::fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
    let mut written = Vec::new();
    let mut emit = |name: String, header: &[&str], rows: &[Vec<f64>]| -> Result<()> {
        let p = out.join(name);
        write_table(&p, header, rows)?;
        written.push(p);
        Ok(())
    };

    if dim == 1 {
        let mixture = match &report.config.experiment {
            Experiment::Gmm1d(g) => Some(&g.mixture),
            _ => None,
        };
        let range = mixture.map(mixture_plot_range).unwrap_or((f64::INFINITY, f64::NEG_INFINITY));
        for (role, m) in &dumps {
            let h = histogram(m.as_slice(), range, HISTOGRAM_BINS);
            emit(format!("{role}_histogram.csv"), &["bin_lo", "bin_hi", "count", "density"], &histogram_rows(&h))?;
        }
        if let Some(mixture) = mixture {
            let (lo, hi) = range;
            let rows: Vec<Vec<f64>> = linspace(lo, hi, DENSITY_POINTS).map(|z| vec![z, mixture.density(z)]).collect();
            emit("true_density.csv".into(), &["z", "density"], &rows)?;
        }
    } else {
        for (role, m) in &dumps {
            let rows: Vec<Vec<f64>> = m.row_iter().map(<[f64]>::to_vec).collect();
            emit(format!("{role}_scatter.csv"), &["z0", "z1"], &rows)?;
        }
        if let (Experiment::Blr2d(b), Some(data)) = (&report.config.experiment, report.file(&dir, "data")) {
            let model = blr_model_from_table(&read_matrix(&data)?)?;
            let mats: Vec<Matrix> = dumps.iter().map(|(_, m)| m.clone()).collect();
            let [(x0, x1), (y0, y1)] = grid_bounds(&mats);
            let n = b.contour_points;
            let mut rows = Vec::with_capacity(n * n);
            for w0 in linspace(x0, x1, n) {
                for w1 in linspace(y0, y1, n) {
                    rows.push(vec![w0, w1, model.log_posterior(&[w0, w1]).0]);
                }
            }
            emit("log_posterior_grid.csv".into(), &["w0", "w1", "log_joint"], &rows)?;
        }
    }
    Ok(written)
}
