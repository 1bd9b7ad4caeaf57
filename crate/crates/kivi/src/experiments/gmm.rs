//! One-dimensional Gaussian mixture target with no data.

use kivi_core::models::{GaussianMixture, TargetModel};
use kivi_core::posteriors::{MeanFieldGaussian, NoiseNet, PlanarFlow};
use kivi_core::vi::{elbo_step, tractable_elbo_step};

use super::{draw, final_elbo, put, stream, streams};
use crate::config::{ExperimentConfig, Gmm1d};
use crate::error::Result;
use crate::output::Outputs;
use crate::report::Metrics;
use crate::stats::{mass_near, Histogram};
use crate::train::{train, TraceFiles};

pub(crate) const HIST_BINS: usize = 100;

/// Range covering every component to five standard deviations.
pub fn plot_range(m: &GaussianMixture) -> (f64, f64) {
    let lo = m.means.iter().zip(&m.stds).map(|(mu, s)| mu - 5.0 * s).fold(f64::INFINITY, f64::min);
    let hi = m.means.iter().zip(&m.stds).map(|(mu, s)| mu + 5.0 * s).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Fraction of the values closer to each mean than to any other.
pub fn nearest_mode_shares(values: &[f64], means: &[f64]) -> Vec<f64> {
    let mut counts = vec![0usize; means.len()];
    for v in values {
        let k = (0..means.len())
            .min_by(|&a, &b| (v - means[a]).abs().total_cmp(&(v - means[b]).abs()))
            .unwrap_or(0);
        counts[k] += 1;
    }
    counts.iter().map(|&c| c as f64 / values.len() as f64).collect()
}

fn summarize(metrics: &mut Metrics, prefix: &str, values: &[f64], spec: &Gmm1d) {
    let mut masses = Vec::new();
    for (k, &mu) in spec.mixture.means.iter().enumerate() {
        let m = mass_near(values, mu, spec.mode_window);
        masses.push(m);
        put(metrics, format!("{prefix}.mode_mass.{k}"), m);
    }
    let shares = nearest_mode_shares(values, &spec.mixture.means);
    for (k, share) in shares.iter().enumerate() {
        put(metrics, format!("{prefix}.mode_share.{k}"), *share);
    }
    put(metrics, format!("{prefix}.mode_share.max"), shares.iter().copied().fold(0.0, f64::max));
    put(metrics, format!("{prefix}.mode_mass.max"), masses.iter().copied().fold(0.0, f64::max));
    put(metrics, format!("{prefix}.mode_mass.min"), masses.iter().copied().fold(1.0, f64::min));
    let (lo, hi) = plot_range(&spec.mixture);
    let hist = Histogram::new(values, lo, hi, HIST_BINS);
    put(metrics, format!("{prefix}.histogram_kl"), hist.kl_to(|z| spec.mixture.density(z)));
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    put(metrics, format!("{prefix}.mean"), mean);
    put(metrics, format!("{prefix}.std"), (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
}

pub fn run(config: &ExperimentConfig, spec: &Gmm1d, out: &mut Outputs) -> Result<Metrics> {
    let target = &spec.mixture;
    let mut metrics = Metrics::new();
    let kivi = &config.kivi;

    let mut q = NoiseNet::new(spec.posterior.clone(), &mut stream(config, streams::INIT))?;
    let mut rng = stream(config, streams::TRAIN);
    let trace = train(out, &TraceFiles::KIVI, &mut q, &kivi.optimizer, kivi.iterations, 1, &mut rng, |q, _, r| {
        elbo_step(target, q, &[], kivi, r)
    })?;
    put(&mut metrics, "kivi.final_elbo", final_elbo(&trace, 50));
    out.checkpoint("checkpoint", "checkpoint.txt", &kivi_core::autodiff::Parameterized::params(&q))?;
    let samples = draw(&q, spec.dump_samples, &mut stream(config, streams::FINAL))?;
    out.samples("samples", "samples.csv", &samples)?;
    summarize(&mut metrics, "kivi", samples.as_slice(), spec);

    let (opt, iterations) = config.baseline_schedule();
    let draws = config.baselines.samples;
    if config.baselines.mean_field {
        let mut rng = stream(config, streams::MEAN_FIELD);
        // Narrow start at one draw of the target. A wide Gaussian centred
        // between the modes is a local optimum that traps a start near zero.
        let start = target.sample_prior(1, &mut rng)[(0, 0)];
        let mut mf = MeanFieldGaussian::with_values(&[start], &[0.1f64.ln()])?;
        let files = TraceFiles {
            key: "mean_field_trace",
            trace: "mean_field_trace.csv",
            timing: "mean_field_timing.csv",
        };
        let trace = train(out, &files, &mut mf, &opt, iterations, 1, &mut rng, |q, _, r| {
            tractable_elbo_step(target, q, &[], draws, r)
        })?;
        put(&mut metrics, "mean_field.final_elbo", final_elbo(&trace, 50));
        let samples = draw(&mf, spec.dump_samples, &mut rng)?;
        out.samples("mean_field_samples", "mean_field_samples.csv", &samples)?;
        summarize(&mut metrics, "mean_field", samples.as_slice(), spec);
    }
    if let Some(layers) = config.baselines.planar_flow {
        let mut rng = stream(config, streams::FLOW);
        let mut flow = PlanarFlow::new(1, layers, &mut rng);
        let files = TraceFiles {
            key: "planar_flow_trace",
            trace: "planar_flow_trace.csv",
            timing: "planar_flow_timing.csv",
        };
        let trace = train(out, &files, &mut flow, &opt, iterations, 1, &mut rng, |q, _, r| {
            tractable_elbo_step(target, q, &[], draws, r)
        })?;
        put(&mut metrics, "planar_flow.final_elbo", final_elbo(&trace, 50));
        let samples = draw(&flow, spec.dump_samples, &mut rng)?;
        out.samples("planar_flow_samples", "planar_flow_samples.csv", &samples)?;
        summarize(&mut metrics, "planar_flow", samples.as_slice(), spec);
    }
    Ok(metrics)
}
