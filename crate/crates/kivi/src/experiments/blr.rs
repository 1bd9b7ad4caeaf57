//! Two-dimensional Bayesian logistic regression against an HMC reference.

use kivi_core::autodiff::Parameterized;
use kivi_core::linalg::Matrix;
use kivi_core::models::Blr;
use kivi_core::oracles::hmc_sample;
use kivi_core::posteriors::{MeanFieldGaussian, NoiseNet};
use kivi_core::vi::{elbo_step, tractable_elbo_step};

use super::{draw, final_elbo, put, stream, streams, Batches};
use crate::config::{Blr2d, ExperimentConfig};
use crate::error::Result;
use crate::output::Outputs;
use crate::report::Metrics;
use crate::stats::{correlation, moments};
use crate::train::{train, TraceFiles};

/// Header of `data.csv`: inputs `x0, x1, …` then the label `y`.
pub(crate) fn data_rows(model: &Blr) -> (Vec<String>, Vec<Vec<f64>>) {
    let x = model.inputs();
    let mut header: Vec<String> = (0..x.cols()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    let rows = x
        .row_iter()
        .zip(model.labels())
        .map(|(r, &y)| r.iter().copied().chain([y]).collect())
        .collect();
    (header, rows)
}

/// Rebuilds the model from `data.csv`.
pub fn model_from_table(table: &Matrix) -> Result<Blr> {
    let d = table.cols() - 1;
    let mut x = Vec::with_capacity(table.rows() * d);
    let mut y = Vec::with_capacity(table.rows());
    for r in table.row_iter() {
        x.extend_from_slice(&r[..d]);
        y.push(r[d]);
    }
    Ok(Blr::new(Matrix::from_vec(table.rows(), d, x)?, y)?)
}

fn summarize(metrics: &mut Metrics, prefix: &str, samples: &Matrix) -> f64 {
    let (mean, cov) = moments(samples);
    for (j, m) in mean.iter().enumerate() {
        put(metrics, format!("{prefix}.mean.{j}"), *m);
        put(metrics, format!("{prefix}.var.{j}"), cov[(j, j)]);
    }
    put(metrics, format!("{prefix}.cov.01"), cov[(0, 1)]);
    let corr = correlation(samples);
    put(metrics, format!("{prefix}.corr"), corr);
    corr
}

pub fn run(config: &ExperimentConfig, spec: &Blr2d, out: &mut Outputs) -> Result<Metrics> {
    let mut metrics = Metrics::new();
    let kivi = &config.kivi;
    let (model, truth) = Blr::synthetic(spec.data_points, 2, &mut stream(config, streams::DATA));
    let (header, rows) = data_rows(&model);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.table("data", "data.csv", &header, &rows)?;
    put(&mut metrics, "data.true_w.0", truth[0]);
    put(&mut metrics, "data.true_w.1", truth[1]);

    let mut q = NoiseNet::new(spec.posterior.clone(), &mut stream(config, streams::INIT))?;
    let mut batches = Batches::new(spec.data_points, kivi.batch_size);
    let per_epoch = batches.per_epoch();
    let mut rng = stream(config, streams::TRAIN);
    let trace = train(out, &TraceFiles::KIVI, &mut q, &kivi.optimizer, kivi.iterations, per_epoch, &mut rng, |q, i, r| {
        let batch = batches.get(i, r);
        elbo_step(&model, q, &batch, kivi, r)
    })?;
    put(&mut metrics, "kivi.final_elbo", final_elbo(&trace, 50));
    out.checkpoint("checkpoint", "checkpoint.txt", &q.params())?;
    let samples = draw(&q, spec.dump_samples, &mut stream(config, streams::FINAL))?;
    out.samples("samples", "samples.csv", &samples)?;
    let kivi_corr = summarize(&mut metrics, "kivi", &samples);

    let mut reference = None;
    if config.baselines.hmc {
        let hmc = hmc_sample(&model, &|r| r.normals(2), &spec.hmc, config.seed ^ streams::HMC_SALT)?;
        out.samples("hmc_samples", "hmc_samples.csv", &hmc.samples)?;
        put(&mut metrics, "hmc.acceptance", hmc.acceptance_rate);
        put(&mut metrics, "hmc.divergences", hmc.divergences as f64);
        reference = Some(summarize(&mut metrics, "hmc", &hmc.samples));
    }

    let mut mf_corr = None;
    if config.baselines.mean_field {
        let (opt, iterations) = config.baseline_schedule();
        let draws = config.baselines.samples;
        let mut rng = stream(config, streams::MEAN_FIELD);
        let mut mf = MeanFieldGaussian::new(2);
        let mut batches = Batches::new(spec.data_points, kivi.batch_size);
        let files = TraceFiles {
            key: "mean_field_trace",
            trace: "mean_field_trace.csv",
            timing: "mean_field_timing.csv",
        };
        let trace = train(out, &files, &mut mf, &opt, iterations, per_epoch, &mut rng, |q, i, r| {
            let batch = batches.get(i, r);
            tractable_elbo_step(&model, q, &batch, draws, r)
        })?;
        put(&mut metrics, "mean_field.final_elbo", final_elbo(&trace, 50));
        let samples = draw(&mf, spec.dump_samples, &mut rng)?;
        out.samples("mean_field_samples", "mean_field_samples.csv", &samples)?;
        mf_corr = Some(summarize(&mut metrics, "mean_field", &samples));
    }

    if let Some(h) = reference {
        put(&mut metrics, "kivi.corr_abs_diff_vs_hmc", (kivi_corr - h).abs());
        put(&mut metrics, "kivi.corr_sign_matches_hmc", f64::from(u8::from(kivi_corr.signum() == h.signum())));
        if let Some(m) = mf_corr {
            put(&mut metrics, "mean_field.corr_abs_diff_vs_hmc", (m - h).abs());
        }
    }
    Ok(metrics)
}
