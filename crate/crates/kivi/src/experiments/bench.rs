//! Estimator checks: KL-only minimization towards `N(0, I)` and the KL
//! tracking grid on Gaussian pairs.

use kivi_core::autodiff::{Parameterized, Tensor};
use kivi_core::linalg::Matrix;
use kivi_core::models::StandardNormal;
use kivi_core::oracles::analytic_gaussian_kl;
use kivi_core::posteriors::NoiseNet;
use kivi_core::rng::Rng;
use kivi_core::vi::{elbo_step, kl_from_samples, KiviConfig};

use super::{draw, final_elbo, put, stream, streams};
use crate::config::{EstimatorBench, ExperimentConfig};
use crate::error::Result;
use crate::output::Outputs;
use crate::report::Metrics;
use crate::stats::{distance_from_identity, moments};
use crate::train::{train, TraceFiles};

pub const GRID_MEANS: [f64; 3] = [0.0, 0.5, 1.0];
pub const GRID_STDS: [f64; 3] = [0.8, 1.0, 1.25];

/// One `(μ, σ)` cell of the tracking grid; `q = N(μ·1, σ²I)`, `p = N(0, I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackingCell {
    pub mean: f64,
    pub std: f64,
    pub analytic: f64,
    /// Average estimate over the refits.
    pub estimate: f64,
    /// `|estimate − analytic| / analytic`; NaN where the true KL is zero.
    pub relative_error: f64,
}

/// Averages `refits` ratio-based KL estimates per cell, with the draw
/// counts, kernel and direction of `kivi`.
pub fn tracking_grid(dim: usize, refits: usize, kivi: &KiviConfig, rng: &mut Rng) -> Result<Vec<TrackingCell>> {
    let mut cells = Vec::new();
    for &mu in &GRID_MEANS {
        for &sd in &GRID_STDS {
            let analytic = analytic_gaussian_kl(&vec![mu; dim], &vec![sd; dim], &vec![0.0; dim], &vec![1.0; dim])?;
            let mut total = 0.0;
            for _ in 0..refits {
                let q: Vec<f64> = rng.normals(kivi.n_q * dim).into_iter().map(|e| mu + sd * e).collect();
                let q = Matrix::from_vec(kivi.n_q, dim, q)?;
                let p = Matrix::from_vec(kivi.n_p, dim, rng.normals(kivi.n_p * dim))?;
                let est = kl_from_samples(&q, &Tensor::from_matrix(&q), &p, &kivi.kernel, kivi.reverse_trick)?;
                total += est.value.item()?;
            }
            let estimate = total / refits as f64;
            let relative_error = if analytic > 0.0 {
                (estimate - analytic).abs() / analytic
            } else {
                f64::NAN
            };
            cells.push(TrackingCell {
                mean: mu,
                std: sd,
                analytic,
                estimate,
                relative_error,
            });
        }
    }
    Ok(cells)
}

pub fn run(config: &ExperimentConfig, spec: &EstimatorBench, out: &mut Outputs) -> Result<Metrics> {
    let mut metrics = Metrics::new();
    let kivi = &config.kivi;
    let target = StandardNormal { dim: spec.dim };
    put(&mut metrics, "reverse_trick", f64::from(u8::from(kivi.reverse_trick)));

    let mut q = NoiseNet::new(spec.posterior.clone(), &mut stream(config, streams::INIT))?;
    let mut rng = stream(config, streams::TRAIN);
    let trace = train(out, &TraceFiles::KIVI, &mut q, &kivi.optimizer, kivi.iterations, 1, &mut rng, |q, _, r| {
        elbo_step(&target, q, &[], kivi, r)
    })?;
    put(&mut metrics, "kivi.final_kl_estimate", -final_elbo(&trace, 50));
    out.checkpoint("checkpoint", "checkpoint.txt", &q.params())?;
    let samples = draw(&q, spec.dump_samples, &mut stream(config, streams::FINAL))?;
    out.samples("samples", "samples.csv", &samples)?;
    let (mean, cov) = moments(&samples);
    put(&mut metrics, "kivi.mean_norm", mean.iter().map(|m| m * m).sum::<f64>().sqrt());
    put(&mut metrics, "kivi.cov_identity_distance", distance_from_identity(&cov));

    if spec.tracking {
        let cells = tracking_grid(spec.dim, spec.refits, kivi, &mut stream(config, streams::EXTRA))?;
        let rows: Vec<Vec<f64>> = cells
            .iter()
            .map(|c| vec![c.mean, c.std, c.analytic, c.estimate, c.relative_error])
            .collect();
        out.table("tracking", "tracking.csv", &["mean", "std", "analytic_kl", "estimate", "relative_error"], &rows)?;
        let finite = cells.iter().map(|c| c.relative_error).filter(|e| e.is_finite());
        put(&mut metrics, "tracking.max_relative_error", finite.clone().fold(0.0, f64::max));
        let n = finite.clone().count() as f64;
        put(&mut metrics, "tracking.mean_relative_error", finite.sum::<f64>() / n);
        if let Some(c) = cells.iter().find(|c| c.analytic == 0.0) {
            put(&mut metrics, "tracking.abs_error_at_zero_kl", c.estimate.abs());
        }
    }
    Ok(metrics)
}
