use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;

/// Energy increase beyond which a trajectory counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmcConfig {
    pub chains: usize,
    pub iterations: usize,
    pub leapfrog_steps: usize,
    pub initial_step_size: f64,
    pub target_accept: f64,
    /// Defaults to half of `iterations`.
    #[serde(default)]
    pub burn_in: Option<usize>,
    /// After burn-in each trajectory uses `step · U(1 − j, 1 + j)`.
    #[serde(default = "default_jitter")]
    pub step_jitter: f64,
}

fn default_jitter() -> f64 {
    0.5
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            chains: 100,
            iterations: 200,
            leapfrog_steps: 10,
            initial_step_size: 0.001,
            target_accept: 0.97,
            burn_in: None,
            step_jitter: default_jitter(),
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.iterations == 0 || self.leapfrog_steps == 0 {
            return Err(Error::invalid("hmc counts must be at least 1"));
        }
        if !(self.initial_step_size > 0.0) {
            return Err(Error::invalid("hmc step size must be positive"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::invalid("hmc target acceptance must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.step_jitter) {
            return Err(Error::invalid("hmc step jitter must lie in [0, 1)"));
        }
        if self.burn() >= self.iterations {
            return Err(Error::invalid("hmc burn-in must leave at least one draw"));
        }
        Ok(())
    }

    pub fn burn(&self) -> usize {
        self.burn_in.unwrap_or(self.iterations / 2)
    }
}

/// Log density and its gradient at a point.
pub trait LogDensity {
    fn dim(&self) -> usize;
    fn log_density_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>);
}

impl<F: Fn(&[f64]) -> (f64, Vec<f64>)> LogDensity for (usize, F) {
    fn dim(&self) -> usize {
        self.0
    }

    fn log_density_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.1)(x)
    }
}

#[derive(Clone, Debug)]
pub struct HmcOutput {
    /// Post-burn-in draws, chain-major: `chains × (iterations − burn_in)` rows.
    pub samples: Matrix,
    /// Mean Metropolis acceptance probability over post-burn-in iterations.
    pub acceptance_rate: f64,
    pub divergences: usize,
    pub step_sizes: Vec<f64>,
}

/// `steps` leapfrog updates of `(position, momentum)` under the potential `−log p`.
pub fn leapfrog(
    target: &dyn LogDensity,
    position: &mut [f64],
    momentum: &mut [f64],
    step: f64,
    steps: usize,
) {
    let (_, mut grad) = target.log_density_and_gradient(position);
    for _ in 0..steps {
        for (p, g) in momentum.iter_mut().zip(&grad) {
            *p += 0.5 * step * g;
        }
        for (x, p) in position.iter_mut().zip(momentum.iter()) {
            *x += step * p;
        }
        grad = target.log_density_and_gradient(position).1;
        for (p, g) in momentum.iter_mut().zip(&grad) {
            *p += 0.5 * step * g;
        }
    }
}

/// `−log p(x) + ½‖m‖²`.
pub fn hamiltonian(target: &dyn LogDensity, position: &[f64], momentum: &[f64]) -> f64 {
    let kinetic: f64 = momentum.iter().map(|p| p * p).sum();
    -target.log_density_and_gradient(position).0 + 0.5 * kinetic
}

struct DualAveraging {
    mu: f64,
    target: f64,
    h_bar: f64,
    log_step: f64,
    log_step_bar: f64,
    m: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(initial_step: f64, target: f64) -> Self {
        Self {
            mu: (10.0 * initial_step).ln(),
            target,
            h_bar: 0.0,
            log_step: initial_step.ln(),
            log_step_bar: 0.0,
            m: 0.0,
        }
    }

    fn update(&mut self, accept_prob: f64) {
        self.m += 1.0;
        let w = 1.0 / (self.m + Self::T0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - accept_prob);
        self.log_step = self.mu - self.m.sqrt() / Self::GAMMA * self.h_bar;
        let eta = self.m.powf(-Self::KAPPA);
        self.log_step_bar = eta * self.log_step + (1.0 - eta) * self.log_step_bar;
    }
}

struct ChainOutput {
    draws: Vec<f64>,
    accept_sum: f64,
    divergences: usize,
    step: f64,
}

fn run_chain(
    target: &dyn LogDensity,
    config: &HmcConfig,
    mut position: Vec<f64>,
    rng: &mut Rng,
) -> ChainOutput {
    let d = target.dim();
    let burn = config.burn();
    let mut adapt = DualAveraging::new(config.initial_step_size, config.target_accept);
    let mut step = config.initial_step_size;
    let mut out = ChainOutput {
        draws: Vec::with_capacity((config.iterations - burn) * d),
        accept_sum: 0.0,
        divergences: 0,
        step,
    };
    for it in 0..config.iterations {
        let mut momentum = rng.normals(d);
        let h0 = hamiltonian(target, &position, &momentum);
        let mut proposal = position.clone();
        let eps = if it < burn || config.step_jitter == 0.0 {
            step
        } else {
            step * rng.uniform_in(1.0 - config.step_jitter, 1.0 + config.step_jitter)
        };
        leapfrog(target, &mut proposal, &mut momentum, eps, config.leapfrog_steps);
        let delta = hamiltonian(target, &proposal, &momentum) - h0;
        let divergent = !delta.is_finite() || delta > DIVERGENCE_THRESHOLD;
        let accept_prob = if divergent { 0.0 } else { (-delta).exp().min(1.0) };
        if divergent {
            out.divergences += 1;
        } else if rng.uniform() < accept_prob {
            position = proposal;
        }
        if it < burn {
            adapt.update(accept_prob);
            step = if it + 1 == burn {
                adapt.log_step_bar.exp()
            } else {
                adapt.log_step.exp()
            };
        } else {
            out.accept_sum += accept_prob;
            out.draws.extend_from_slice(&position);
        }
    }
    out.step = step;
    out
}

/// Runs `config.chains` independent chains; chain `c` draws from
/// `Rng::stream(seed, c)` and starts at `init(rng)`.
pub fn hmc_sample(
    target: &dyn LogDensity,
    init: &dyn Fn(&mut Rng) -> Vec<f64>,
    config: &HmcConfig,
    seed: u64,
) -> Result<HmcOutput> {
    config.validate()?;
    let d = target.dim();
    let kept = config.iterations - config.burn();
    let mut data = Vec::with_capacity(config.chains * kept * d);
    let mut accept = 0.0;
    let mut divergences = 0;
    let mut step_sizes = Vec::with_capacity(config.chains);
    for c in 0..config.chains {
        let mut rng = Rng::stream(seed, c as u64);
        let start = init(&mut rng);
        if start.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: start.len() });
        }
        let chain = run_chain(target, config, start, &mut rng);
        data.extend(chain.draws);
        accept += chain.accept_sum;
        divergences += chain.divergences;
        step_sizes.push(chain.step);
    }
    Ok(HmcOutput {
        samples: Matrix::from_vec(config.chains * kept, d, data)?,
        acceptance_rate: accept / (config.chains * kept) as f64,
        divergences,
        step_sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn standard_normal() -> (usize, impl Fn(&[f64]) -> (f64, Vec<f64>)) {
        (2, |x: &[f64]| (-0.5 * (x[0] * x[0] + x[1] * x[1]), vec![-x[0], -x[1]]))
    }

    fn correlated(rho: f64) -> (usize, impl Fn(&[f64]) -> (f64, Vec<f64>)) {
        let c = 1.0 / (1.0 - rho * rho);
        (2, move |x: &[f64]| {
            let q = c * (x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]);
            (-0.5 * q, vec![-c * (x[0] - rho * x[1]), -c * (x[1] - rho * x[0])])
        })
    }

    fn from_prior(rng: &mut Rng) -> Vec<f64> {
        rng.normals(2)
    }

    #[test]
    fn recovers_standard_normal() {
        let out = hmc_sample(&standard_normal(), &from_prior, &HmcConfig::default(), 1).unwrap();
        assert_eq!(out.samples.rows(), 100 * 100);
        let mean = out.samples.column_means();
        assert!(mean.iter().all(|m| m.abs() <= 0.05), "{mean:?}");
        let cov = out.samples.covariance();
        assert!(cov.frobenius_distance(&Matrix::identity(2)) <= 0.1, "{cov:?}");
        assert!((out.acceptance_rate - 0.97).abs() <= 0.05, "{}", out.acceptance_rate);
    }

    #[test]
    fn recovers_correlation() {
        let rho = -0.7;
        let out = hmc_sample(&correlated(rho), &from_prior, &HmcConfig::default(), 2).unwrap();
        let cov = out.samples.covariance();
        let r = cov[(0, 1)] / (cov[(0, 0)] * cov[(1, 1)]).sqrt();
        assert!((r - rho).abs() <= 0.05, "{r}");
        let cfg = HmcConfig { target_accept: 0.9, ..HmcConfig::default() };
        let out = hmc_sample(&correlated(rho), &from_prior, &cfg, 3).unwrap();
        assert!((out.acceptance_rate - 0.9).abs() <= 0.05, "{}", out.acceptance_rate);
    }

    #[test]
    fn leapfrog_conserves_energy() {
        let target = standard_normal();
        let mut x = vec![0.8, -1.1];
        let mut p = vec![0.3, 0.9];
        let h0 = hamiltonian(&target, &x, &p);
        leapfrog(&target, &mut x, &mut p, 1e-4, 1000);
        assert!((hamiltonian(&target, &x, &p) - h0).abs() <= 1e-6);
    }

    #[test]
    fn divergences_are_rejected_not_fatal() {
        // A huge fixed step on a stiff target diverges on every proposal.
        let stiff = (1, |x: &[f64]| (-5e3 * x[0] * x[0], vec![-1e4 * x[0]]));
        let cfg = HmcConfig {
            chains: 2,
            iterations: 10,
            initial_step_size: 10.0,
            burn_in: Some(0),
            ..HmcConfig::default()
        };
        let out = hmc_sample(&stiff, &|_: &mut Rng| vec![0.5], &cfg, 3).unwrap();
        assert_eq!(out.divergences, 20);
        assert!(out.samples.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn config_validation() {
        let bad = [
            HmcConfig { leapfrog_steps: 0, ..HmcConfig::default() },
            HmcConfig { chains: 0, ..HmcConfig::default() },
            HmcConfig { initial_step_size: 0.0, ..HmcConfig::default() },
            HmcConfig { target_accept: 1.0, ..HmcConfig::default() },
            HmcConfig { burn_in: Some(200), ..HmcConfig::default() },
            HmcConfig { step_jitter: 1.0, ..HmcConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn chains_are_reproducible() {
        let cfg = HmcConfig { chains: 3, iterations: 20, ..HmcConfig::default() };
        let a = hmc_sample(&standard_normal(), &from_prior, &cfg, 9).unwrap();
        let b = hmc_sample(&standard_normal(), &from_prior, &cfg, 9).unwrap();
        assert_eq!(a.samples, b.samples);
    }
}
