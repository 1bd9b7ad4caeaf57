//! JSON experiment configuration.
//!
//! Every config carries `schema_version`, a `kind` selecting the
//! experiment, the KIVI settings under `kivi`, and kind-specific fields at
//! the top level. See the README for the full schema.

use std::path::{Path, PathBuf};

use kivi_core::models::GaussianMixture;
use kivi_core::oracles::HmcConfig;
use kivi_core::posteriors::{Activation, LayerSpec, NoiseNetSpec};
use kivi_core::vi::{KiviConfig, OptimizerConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "KIVI_OUTPUT_ROOT";

pub const KINDS: [&str; 5] = ["gmm1d", "blr2d", "bnn_regression", "amortized_ac", "estimator_bench"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Seeds every random stream of the run; overrides `kivi.seed`.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub kivi: KiviConfig,
    #[serde(default)]
    pub baselines: Baselines,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Gmm1d(Gmm1d),
    Blr2d(Blr2d),
    BnnRegression(BnnRegression),
    AmortizedAc(AmortizedAc),
    EstimatorBench(EstimatorBench),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Gmm1d(_) => "gmm1d",
            Experiment::Blr2d(_) => "blr2d",
            Experiment::BnnRegression(_) => "bnn_regression",
            Experiment::AmortizedAc(_) => "amortized_ac",
            Experiment::EstimatorBench(_) => "estimator_bench",
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_draws() -> usize {
    100
}

fn default_dump() -> usize {
    5000
}

/// Tractable baselines trained next to KIVI on the same target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    #[serde(default)]
    pub mean_field: bool,
    /// Number of planar layers; `None` skips the flow baseline.
    #[serde(default)]
    pub planar_flow: Option<usize>,
    /// Run the HMC reference (BLR only).
    #[serde(default)]
    pub hmc: bool,
    /// Monte Carlo draws per step of the tractable ELBO.
    #[serde(default = "default_draws")]
    pub samples: usize,
    /// Defaults to the KIVI optimizer.
    #[serde(default)]
    pub optimizer: Option<OptimizerConfig>,
    /// Defaults to `kivi.iterations`.
    #[serde(default)]
    pub iterations: Option<usize>,
}

impl Default for Baselines {
    fn default() -> Self {
        Self {
            mean_field: false,
            planar_flow: None,
            hmc: false,
            samples: default_draws(),
            optimizer: None,
            iterations: None,
        }
    }
}

fn default_mixture() -> GaussianMixture {
    GaussianMixture::symmetric()
}

fn gmm_posterior() -> NoiseNetSpec {
    NoiseNetSpec::mlp(1, &[10, 10], 1, Activation::Relu)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gmm1d {
    #[serde(default = "default_mixture")]
    pub mixture: GaussianMixture,
    #[serde(default = "gmm_posterior")]
    pub posterior: NoiseNetSpec,
    /// Final draws written to the sample dump.
    #[serde(default = "default_dump")]
    pub dump_samples: usize,
    /// Half-width of the window around each mode used for mode mass.
    #[serde(default = "default_window")]
    pub mode_window: f64,
}

fn default_window() -> f64 {
    1.5
}

/// Two dense layers of 20, Gaussian noise with trainable variance added to
/// the second (linear) one, then a dense layer of 20 and a linear output.
pub fn blr_posterior(dim: usize) -> NoiseNetSpec {
    let layer = |width, activation| LayerSpec { width, activation };
    NoiseNetSpec {
        noise_dim: dim,
        layers: vec![
            layer(20, Activation::Relu),
            layer(20, Activation::Identity),
            layer(20, Activation::Relu),
            layer(dim, Activation::Identity),
        ],
        inject_after: Some(1),
    }
}

fn blr_default_posterior() -> NoiseNetSpec {
    blr_posterior(2)
}

fn default_points() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Blr2d {
    #[serde(default = "default_points")]
    pub data_points: usize,
    #[serde(default = "blr_default_posterior")]
    pub posterior: NoiseNetSpec,
    #[serde(default)]
    pub hmc: HmcConfig,
    #[serde(default = "default_dump")]
    pub dump_samples: usize,
    /// Points per axis of the exported log-posterior grid.
    #[serde(default = "default_grid")]
    pub contour_points: usize,
}

fn default_grid() -> usize {
    101
}

/// Synthetic `y = sin(x) + ε` data used when no dataset file is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineData {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub noise: f64,
}

impl Default for SineData {
    fn default() -> Self {
        Self {
            n: 200,
            lo: -3.0,
            hi: 3.0,
            noise: 0.1,
        }
    }
}

/// Per-layer noise network: `(noise_dim, hidden, weights)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerPosterior {
    pub noise_dim: usize,
    pub hidden: Vec<usize>,
}

fn default_layer_posteriors() -> Vec<LayerPosterior> {
    vec![
        LayerPosterior {
            noise_dim: 20,
            hidden: vec![30],
        };
        2
    ]
}

fn default_hidden() -> Vec<usize> {
    vec![50]
}

fn default_test_fraction() -> f64 {
    0.1
}

fn default_predictive() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnnRegression {
    /// CSV file whose last column is the target; relative paths resolve
    /// against the config file's directory.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: SineData,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// One entry per weight layer of the network.
    #[serde(default = "default_layer_posteriors")]
    pub posterior: Vec<LayerPosterior>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Posterior draws for the predictive distribution.
    #[serde(default = "default_predictive")]
    pub predictive_samples: usize,
}

fn default_latent() -> usize {
    2
}

fn default_identity_runs() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmortizedAc {
    #[serde(default = "default_latent")]
    pub latent_dim: usize,
    #[serde(default = "default_observed")]
    pub data_dim: usize,
    #[serde(default = "default_points")]
    pub data_points: usize,
    #[serde(default = "default_vae_hidden")]
    pub hidden: Vec<usize>,
    /// Extra noise inputs of the implicit encoder.
    #[serde(default = "default_encoder_noise")]
    pub encoder_noise: usize,
    #[serde(default = "default_observation_std")]
    pub observation_std: f64,
    /// Repetitions of the Adaptive Contrast versus plain ELBO comparison.
    #[serde(default = "default_identity_runs")]
    pub identity_runs: usize,
}

fn default_observed() -> usize {
    5
}

fn default_vae_hidden() -> Vec<usize> {
    vec![16]
}

fn default_encoder_noise() -> usize {
    4
}

fn default_observation_std() -> f64 {
    0.5
}

fn default_refits() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorBench {
    #[serde(default = "default_latent")]
    pub dim: usize,
    /// Posterior trained to minimize `KL(q ‖ N(0, I))` alone.
    #[serde(default = "blr_default_posterior")]
    pub posterior: NoiseNetSpec,
    /// Also run the Gaussian KL-tracking grid.
    #[serde(default = "default_true")]
    pub tracking: bool,
    #[serde(default = "default_refits")]
    pub refits: usize,
    #[serde(default = "default_dump")]
    pub dump_samples: usize,
}

impl ExperimentConfig {
    /// Parses and validates a config. Schema and `kind` problems are
    /// reported with the offending field name.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| HarnessError::config(format!("not valid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| HarnessError::config("top level must be an object"))?;
        match obj.get("schema_version").and_then(Value::as_u64) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(HarnessError::config(format!("field `schema_version`: unsupported version {v}"))),
            None => return Err(HarnessError::config("field `schema_version`: missing or not an integer")),
        }
        match obj.get("kind") {
            Some(Value::String(k)) if KINDS.contains(&k.as_str()) => {}
            Some(other) => {
                return Err(HarnessError::config(format!(
                    "field `kind`: unknown experiment kind {other}; expected one of {}",
                    KINDS.join(", ")
                )))
            }
            None => return Err(HarnessError::config("field `kind`: missing")),
        }
        let mut config: ExperimentConfig = serde_json::from_value(value).map_err(|e| HarnessError::config(e.to_string()))?;
        config.kivi.seed = config.seed;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        if let Experiment::BnnRegression(b) = &mut config.experiment {
            if let Some(ds) = &mut b.dataset {
                if ds.is_relative() {
                    *ds = path.parent().unwrap_or(Path::new(".")).join(&*ds);
                }
            }
        }
        config.check_files()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: kivi_core::Error| HarnessError::config(format!("field `{name}`: {e}"));
        self.kivi.validate().map_err(|e| field("kivi", e))?;
        if self.baselines.samples == 0 {
            return Err(HarnessError::config("field `baselines.samples`: must be at least 1"));
        }
        match &self.experiment {
            Experiment::Gmm1d(g) => {
                g.mixture.validate().map_err(|e| field("mixture", e))?;
                g.posterior.validate().map_err(|e| field("posterior", e))?;
                if g.posterior.output_dim() != 1 {
                    return Err(HarnessError::config("field `posterior`: output width must be 1"));
                }
            }
            Experiment::Blr2d(b) => {
                b.posterior.validate().map_err(|e| field("posterior", e))?;
                b.hmc.validate().map_err(|e| field("hmc", e))?;
                if b.posterior.output_dim() != 2 || b.data_points == 0 || b.contour_points < 2 {
                    return Err(HarnessError::config(
                        "field `posterior`/`data_points`/`contour_points`: need output width 2, data and a grid",
                    ));
                }
            }
            Experiment::BnnRegression(b) => {
                if b.posterior.len() != b.hidden.len() + 1 {
                    return Err(HarnessError::config("field `posterior`: need one entry per weight layer"));
                }
                if !(b.test_fraction > 0.0 && b.test_fraction < 1.0) {
                    return Err(HarnessError::config("field `test_fraction`: must lie in (0, 1)"));
                }
                if b.hidden.contains(&0) || b.posterior.iter().any(|p| p.noise_dim == 0) {
                    return Err(HarnessError::config("field `hidden`/`posterior`: widths must be positive"));
                }
            }
            Experiment::AmortizedAc(a) => {
                if a.latent_dim == 0 || a.data_dim == 0 || a.data_points == 0 || a.identity_runs < 2 {
                    return Err(HarnessError::config("field `amortized_ac`: sizes must be positive, identity_runs ≥ 2"));
                }
                if self.kivi.n_q < 2 {
                    return Err(HarnessError::config("field `kivi.n_q`: Adaptive Contrast needs at least 2 draws"));
                }
            }
            Experiment::EstimatorBench(e) => {
                e.posterior.validate().map_err(|e| field("posterior", e))?;
                if e.posterior.output_dim() != e.dim || e.refits == 0 {
                    return Err(HarnessError::config("field `posterior`: output width must equal `dim`"));
                }
            }
        }
        Ok(())
    }

    fn check_files(&self) -> Result<()> {
        if let Experiment::BnnRegression(BnnRegression { dataset: Some(ds), .. }) = &self.experiment {
            if !ds.is_file() {
                return Err(HarnessError::config(format!("field `dataset`: {} does not exist", ds.display())));
            }
        }
        Ok(())
    }

    /// `output_dir`, placed under `$KIVI_OUTPUT_ROOT` when that is set and
    /// the directory is relative.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }

    /// Optimizer and iteration budget for the tractable baselines.
    pub fn baseline_schedule(&self) -> (OptimizerConfig, usize) {
        (
            self.baselines.optimizer.clone().unwrap_or_else(|| self.kivi.optimizer.clone()),
            self.baselines.iterations.unwrap_or(self.kivi.iterations),
        )
    }
}
