//! Amortized inference with Adaptive Contrast on a small generative model.

use kivi_core::autodiff::Parameterized;
use kivi_core::linalg::Matrix;
use kivi_core::models::{Decoder, Observation};
use kivi_core::posteriors::{Activation, AmortizedGaussian, AmortizedNoiseNet, NoiseNetSpec};
use kivi_core::vi::{adaptive_contrast_step, amortized_elbo_step, Pair};

use super::{final_elbo, put, stream, streams, Batches};
use crate::config::{AmortizedAc, ExperimentConfig};
use crate::error::Result;
use crate::output::Outputs;
use crate::report::Metrics;
use crate::stats::mean_and_se;
use crate::train::{train, TraceFiles};

/// Rows used by the identity check; each run refits one ratio per row.
const IDENTITY_ROWS: usize = 10;

fn rows(x: &Matrix, idx: &[usize]) -> Matrix {
    let data: Vec<f64> = idx.iter().flat_map(|&i| x.row(i).iter().copied()).collect();
    Matrix::from_vec(idx.len(), x.cols(), data).expect("sized")
}

pub fn run(config: &ExperimentConfig, spec: &AmortizedAc, out: &mut Outputs) -> Result<Metrics> {
    let mut metrics = Metrics::new();
    let kivi = &config.kivi;
    let observation = Observation::Gaussian { std: spec.observation_std };
    let mut rng = stream(config, streams::DATA);
    let truth = Decoder::new(spec.latent_dim, &spec.hidden, spec.data_dim, observation, &mut rng);
    let x = truth.generate(spec.data_points, &mut rng)?;
    let header: Vec<String> = (0..x.cols()).map(|j| format!("x{j}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.table("data", "data.csv", &header, &x.row_iter().map(<[f64]>::to_vec).collect::<Vec<_>>())?;

    let mut rng = stream(config, streams::INIT);
    let mut decoder = Decoder::new(spec.latent_dim, &spec.hidden, spec.data_dim, observation, &mut rng);
    let net = NoiseNetSpec::mlp(spec.data_dim + spec.encoder_noise, &spec.hidden, spec.latent_dim, Activation::Relu);
    let mut encoder = AmortizedNoiseNet::new(spec.data_dim, spec.encoder_noise, net, &mut rng)?;
    let mut batches = Batches::new(spec.data_points, kivi.batch_size);
    let per_epoch = batches.per_epoch();
    let mut rng = stream(config, streams::TRAIN);
    let trace = {
        let mut pair = Pair(&mut decoder, &mut encoder);
        train(out, &TraceFiles::KIVI, &mut pair, &kivi.optimizer, kivi.iterations, per_epoch, &mut rng, |p, i, r| {
            let batch = rows(&x, &batches.get(i, r));
            adaptive_contrast_step(&*p.0, &*p.1, &batch, spec.data_points, kivi, r)
        })?
    };
    let per_point = spec.data_points as f64;
    put(&mut metrics, "kivi.final_elbo_per_point", final_elbo(&trace, per_epoch.max(10)) / per_point);
    let mut params = decoder.params();
    params.extend(encoder.params());
    out.checkpoint("checkpoint", "checkpoint.txt", &params)?;

    // Identity check: on a Gaussian encoder the Adaptive Contrast objective
    // and the plain Monte Carlo ELBO estimate the same quantity.
    let mut rng = stream(config, streams::EXTRA);
    let gaussian = AmortizedGaussian::new(spec.data_dim, &spec.hidden, spec.latent_dim, Activation::Tanh, &mut rng);
    let idx: Vec<usize> = (0..spec.data_points.min(IDENTITY_ROWS)).collect();
    let sub = rows(&x, &idx);
    let n = idx.len();
    let (mut ac, mut plain, mut kl) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..spec.identity_runs {
        let a = adaptive_contrast_step(&decoder, &gaussian, &sub, n, kivi, &mut rng)?.estimate;
        ac.push(a.elbo / n as f64);
        kl.push(a.kl / n as f64);
        plain.push(amortized_elbo_step(&decoder, &gaussian, &sub, n, kivi.m, &mut rng)?.estimate.elbo / n as f64);
    }
    let (a, sa) = mean_and_se(&ac);
    let (p, sp) = mean_and_se(&plain);
    let se = (sa * sa + sp * sp).sqrt();
    put(&mut metrics, "identity.ac_elbo_per_point", a);
    put(&mut metrics, "identity.ac_se", sa);
    put(&mut metrics, "identity.plain_elbo_per_point", p);
    put(&mut metrics, "identity.plain_se", sp);
    put(&mut metrics, "identity.diff_in_se", (a - p).abs() / se);
    put(&mut metrics, "identity.standardized_kl", mean_and_se(&kl).0);
    let table: Vec<Vec<f64>> = (0..ac.len()).map(|i| vec![i as f64, ac[i], plain[i], kl[i]]).collect();
    out.table("identity", "identity.csv", &["run", "ac_elbo", "plain_elbo", "standardized_kl"], &table)?;
    Ok(metrics)
}
