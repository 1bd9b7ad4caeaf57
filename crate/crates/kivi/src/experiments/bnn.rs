//! Bayesian neural network regression on a CSV dataset or sine data.

use std::path::Path;

use kivi_core::autodiff::Parameterized;
use kivi_core::linalg::Matrix;
use kivi_core::models::{predict, BnnRegression as Model, RegressionData, Standardizer};
use kivi_core::posteriors::{Activation, ConcatPosterior, ImplicitPosterior, NoiseNet, NoiseNetSpec};
use kivi_core::vi::{elbo_step, Pair};

use super::{draw, final_elbo, put, stream, streams, Batches};
use crate::config::{BnnRegression, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::output::{read_matrix, Outputs};
use crate::report::Metrics;
use crate::train::{train, TraceFiles};

/// Numeric CSV with a header; the last column is the target.
pub fn load_dataset(path: &Path) -> Result<RegressionData> {
    let table = read_matrix(path)?;
    if table.cols() < 2 || table.rows() < 2 {
        return Err(HarnessError::Usage(format!(
            "{}: need at least one input column, a target column and two rows",
            path.display()
        )));
    }
    let d = table.cols() - 1;
    let mut x = Vec::with_capacity(table.rows() * d);
    let mut y = Vec::with_capacity(table.rows());
    for r in table.row_iter() {
        x.extend_from_slice(&r[..d]);
        y.push(r[d]);
    }
    Ok(RegressionData::new(Matrix::from_vec(table.rows(), d, x)?, y)?)
}

fn posterior(model: &Model, spec: &BnnRegression, rng: &mut kivi_core::rng::Rng) -> Result<ConcatPosterior> {
    let mut parts: Vec<Box<dyn ImplicitPosterior>> = Vec::new();
    for (layer, block) in spec.posterior.iter().zip(model.blocks()) {
        let net = NoiseNetSpec::mlp(layer.noise_dim, &layer.hidden, block, Activation::Relu);
        parts.push(Box::new(NoiseNet::new(net, rng)?));
    }
    Ok(ConcatPosterior::new(parts)?)
}

pub fn run(config: &ExperimentConfig, spec: &BnnRegression, out: &mut Outputs) -> Result<Metrics> {
    let mut metrics = Metrics::new();
    let kivi = &config.kivi;
    let mut rng = stream(config, streams::DATA);
    let data = match &spec.dataset {
        Some(path) => load_dataset(path)?,
        None => {
            let s = &spec.synthetic;
            RegressionData::sine(s.n, s.lo, s.hi, s.noise, &mut rng)
        }
    };
    let (train_raw, test) = data.split(1.0 - spec.test_fraction, &mut rng)?;
    let scaler = Standardizer::fit(&train_raw);
    let mut model = Model::new(scaler.apply(&train_raw), &spec.hidden)?;
    put(&mut metrics, "data.train_points", train_raw.len() as f64);
    put(&mut metrics, "data.test_points", test.len() as f64);

    let mut q = posterior(&model, spec, &mut stream(config, streams::INIT))?;
    let mut batches = Batches::new(train_raw.len(), kivi.batch_size);
    let per_epoch = batches.per_epoch();
    let mut rng = stream(config, streams::TRAIN);
    let trace = {
        let mut pair = Pair(&mut model, &mut q);
        train(out, &TraceFiles::KIVI, &mut pair, &kivi.optimizer, kivi.iterations, per_epoch, &mut rng, |p, i, r| {
            let batch = batches.get(i, r);
            elbo_step(&*p.0, &*p.1, &batch, kivi, r)
        })?
    };
    put(&mut metrics, "kivi.final_elbo", final_elbo(&trace, per_epoch.max(10)));
    put(&mut metrics, "kivi.epochs", (kivi.iterations as f64 / per_epoch as f64).ceil());
    let mut params = q.params();
    params.extend(model.params());
    out.checkpoint("checkpoint", "checkpoint.txt", &params)?;

    let mut rng = stream(config, streams::FINAL);
    let samples = draw(&q, spec.predictive_samples, &mut rng)?;
    let prediction = predict(&model, &samples, &test, &scaler, &mut rng)?;
    let (a, b) = model.precision();
    put(&mut metrics, "kivi.test_rmse", prediction.rmse);
    put(&mut metrics, "kivi.test_ll", prediction.test_ll);
    put(&mut metrics, "kivi.precision.shape", a);
    put(&mut metrics, "kivi.precision.rate", b);
    let train_fit = predict(&model, &samples, &train_raw, &scaler, &mut rng)?;
    put(&mut metrics, "kivi.train_rmse", train_fit.rmse);

    let rows: Vec<Vec<f64>> = (0..test.len())
        .map(|i| {
            let mut r = test.x.row(i).to_vec();
            r.extend([test.y[i], prediction.mean[i], prediction.variance[i]]);
            r
        })
        .collect();
    let mut header: Vec<String> = (0..test.x.cols()).map(|j| format!("x{j}")).collect();
    header.extend(["y", "pred_mean", "pred_var"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.table("predictions", "predictions.csv", &header, &rows)?;
    out.samples("samples", "samples.csv", &samples)?;
    Ok(metrics)
}
