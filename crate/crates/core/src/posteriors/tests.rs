use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::*;
use crate::autodiff::{Param, Parameterized, Tape, Tensor};
use crate::linalg::Matrix;
use crate::oracles::finite_diff::parameter_gradient_error;
use crate::oracles::{analytic_gaussian_kl, Grid};
use crate::rng::Rng;

fn scalar(v: f64) -> Tensor {
    Tensor::new(vec![v], [1]).unwrap()
}

/// A smooth scalar summary of a sample batch, including its log-density.
fn summary(s: &Sample) -> Tensor {
    let mut out = s.z.tanh().unwrap().sum().unwrap();
    if let Some(lq) = &s.log_density {
        out = out.add(&lq.mean().unwrap()).unwrap();
    }
    out
}

fn fd_check<P: ImplicitPosterior>(p: &mut P, n: usize) -> f64 {
    parameter_gradient_error(
        p,
        &|p: &P, tape: &Tape| summary(&p.sample(tape, n, &mut Rng::seed_from(11)).unwrap()),
        1e-6,
    )
}

#[test]
fn mean_field_standard_log_density() {
    let q = MeanFieldGaussian::new(3);
    let tape = Tape::new();
    let s = q.sample(&tape, 5, &mut Rng::seed_from(1)).unwrap();
    let lq = s.log_density.unwrap();
    for (row, l) in s.z.values().chunks(3).zip(lq.values()) {
        let norm: f64 = row.iter().map(|v| v * v).sum();
        let expected = -1.5 * (2.0 * core::f64::consts::PI).ln() - 0.5 * norm;
        assert!((l - expected).abs() < 1e-12);
    }
    let direct = q.log_density(&tape, &s.z).unwrap();
    for (a, b) in direct.values().iter().zip(lq.values()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn mean_field_monte_carlo_kl() {
    let (mu, ls) = ([0.7, -0.4], [0.2f64, -0.3f64]);
    let q = MeanFieldGaussian::with_values(&mu, &ls).unwrap();
    let tape = Tape::new();
    let n = 200_000;
    let s = q.sample(&tape, n, &mut Rng::seed_from(2)).unwrap();
    let lp = standard_normal_log_density(&s.z).unwrap();
    let diffs: Vec<f64> = s.log_density.unwrap().values().iter().zip(lp.values()).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let exact = analytic_gaussian_kl(&mu, &[ls[0].exp(), ls[1].exp()], &[0.0; 2], &[1.0; 2]).unwrap();
    assert!((mean - exact).abs() <= 4.0 * (var / n as f64).sqrt(), "{mean} vs {exact}");
}

#[test]
fn zero_noise_net_returns_bias() {
    let mut net = NoiseNet::new(NoiseNetSpec::mlp(4, &[10, 10], 3, Activation::Relu), &mut Rng::seed_from(0)).unwrap();
    for p in net.params_mut() {
        p.value_mut().iter_mut().for_each(|v| *v = 0.0);
    }
    net.layers_mut().last_mut().unwrap().bias.set_value(&[1.5, -2.0, 0.25]).unwrap();
    let s = net.sample(&Tape::new(), 7, &mut Rng::seed_from(3)).unwrap();
    assert_eq!(s.z.shape(), &[7, 3]);
    assert!(s.log_density.is_none());
    for row in s.z.values().chunks(3) {
        assert_eq!(row, &[1.5, -2.0, 0.25]);
    }
}

#[test]
fn noise_net_without_noise_is_deterministic() {
    let spec = NoiseNetSpec {
        inject_after: Some(1),
        ..NoiseNetSpec::mlp(2, &[20, 20], 2, Activation::Relu)
    };
    let net = NoiseNet::new(spec, &mut Rng::seed_from(4)).unwrap();
    assert_eq!(net.mid_noise_dim(), Some(20));
    assert_eq!(net.mid_noise_log_var().unwrap().value(), &[0.0; 20]);
    let input = Tensor::zeros([3, 2]);
    let a = net.forward(&Tape::new(), &input, None).unwrap();
    let b = net.forward(&Tape::new(), &input, None).unwrap();
    assert_eq!(a.values(), b.values());
    let noisy = net.forward(&Tape::new(), &input, Some(&Tensor::ones([3, 20]))).unwrap();
    assert_ne!(a.values(), noisy.values());
}

#[test]
fn noise_net_spec_validation() {
    let mut spec = NoiseNetSpec::mlp(2, &[5], 1, Activation::Tanh);
    assert!(spec.validate().is_ok());
    spec.inject_after = Some(2);
    assert!(NoiseNet::new(spec.clone(), &mut Rng::seed_from(0)).is_err());
    spec.inject_after = None;
    spec.layers.clear();
    assert!(spec.validate().is_err());
    let json = serde_json::to_string(&NoiseNetSpec::mlp(2, &[5], 1, Activation::Tanh)).unwrap();
    let back: NoiseNetSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(back, NoiseNetSpec::mlp(2, &[5], 1, Activation::Tanh));
}

#[test]
fn noise_net_gradients() {
    for activation in [Activation::Relu, Activation::Tanh] {
        let spec = NoiseNetSpec {
            inject_after: Some(0),
            ..NoiseNetSpec::mlp(3, &[6, 5], 2, activation)
        };
        let mut net = NoiseNet::new(spec, &mut Rng::seed_from(5)).unwrap();
        assert!(fd_check(&mut net, 4) <= 1e-5);
    }
}

#[test]
fn mmnn_identity_layer() {
    let eye = |n: usize| Param::new("eye", [n, n], Matrix::identity(n).into_vec()).unwrap();
    let layer = MmnnLayer {
        al: eye(3),
        bl: Param::zeros("bl", [3, 4]),
        ar: eye(4),
        br: Param::zeros("br", [3, 4]),
    };
    let net = Mmnn::from_layers((3, 4), vec![layer]).unwrap();
    let x = Tensor::randn([2, 3, 4], &mut Rng::seed_from(6));
    let y = net.forward(&Tape::new(), &x).unwrap();
    assert_eq!(y.shape(), &[2, 3, 4]);
    assert_eq!(y.values(), x.values());
}

#[test]
fn mmnn_parameter_counts() {
    assert_eq!(mmnn_parameter_count(3, 3, 10, 10), 190);
    let single = Mmnn::new((3, 3), &[(10, 10)], &mut Rng::seed_from(0)).unwrap();
    assert_eq!(single.num_parameters(), 190);
    assert_eq!(single.expected_parameter_count(), 190);
    // A dense map between the same shapes needs (3·3)·(10·10) weights.
    assert_eq!(3 * 3 * 10 * 10, 900);
    for chain in [&[(10, 10)][..], &[(8, 6), (5, 12)], &[(30, 30), (30, 30), (10, 51)]] {
        let net = Mmnn::new((4, 5), chain, &mut Rng::seed_from(1)).unwrap();
        assert_eq!(net.num_parameters(), net.expected_parameter_count());
        let mut prev = (4, 5);
        let mut total = 0;
        for &(m, n) in chain {
            total += mmnn_parameter_count(prev.0, prev.1, m, n);
            prev = (m, n);
        }
        assert_eq!(net.num_parameters(), total);
        assert_eq!(net.dim(), prev.0 * prev.1);
    }
}

#[test]
fn mmnn_rejects_broken_chain() {
    let mut rng = Rng::seed_from(0);
    let a = MmnnLayer::new(0, (3, 3), (4, 5), &mut rng);
    let b = MmnnLayer::new(1, (4, 6), (2, 2), &mut rng);
    assert!(Mmnn::from_layers((3, 3), vec![a.clone(), b]).is_err());
    assert!(Mmnn::from_layers((3, 4), vec![a]).is_err());
    assert!(Mmnn::from_layers((3, 3), Vec::new()).is_err());
}

#[test]
fn mmnn_gradients() {
    let mut net = Mmnn::new((3, 2), &[(4, 3), (2, 5)], &mut Rng::seed_from(7)).unwrap();
    for p in net.params_mut() {
        let mut rng = Rng::seed_from(p.len() as u64);
        for v in p.value_mut() {
            *v += 0.3 * rng.normal();
        }
    }
    let err = parameter_gradient_error(
        &mut net,
        &|n: &Mmnn, tape: &Tape| {
            let x = Tensor::randn([3, 3, 2], &mut Rng::seed_from(8));
            n.forward(tape, &x).unwrap().sum().unwrap()
        },
        1e-6,
    );
    assert!(err <= 1e-5, "{err}");
    let s = net.sample(&Tape::new(), 6, &mut Rng::seed_from(9)).unwrap();
    assert_eq!(s.z.shape(), &[6, 10]);
}

#[test]
fn planar_log_det_examples() {
    let z = Tensor::new(vec![0.0], [1, 1]).unwrap();
    let ld = planar_log_det(&scalar(0.5), &scalar(1.0), &scalar(0.0), &z).unwrap();
    assert!((ld.values()[0] - 1.5f64.ln()).abs() < 1e-15);
    let zero = planar_log_det(&scalar(0.0), &scalar(1.0), &scalar(0.3), &z).unwrap();
    assert_eq!(zero.values(), &[0.0]);
}

#[test]
fn planar_correction_keeps_map_invertible() {
    let mut rng = Rng::seed_from(10);
    for _ in 0..200 {
        let u = Tensor::new(rng.normals(3).into_iter().map(|v| 5.0 * v).collect(), [3]).unwrap();
        let w = Tensor::new(rng.normals(3), [3]).unwrap();
        let u_hat = invertible_u(&u, &w).unwrap();
        let wu: f64 = u_hat.values().iter().zip(w.values()).map(|(a, b)| a * b).sum();
        assert!(wu > -1.0);
        let z = Tensor::randn([5, 3], &mut rng);
        let ld = planar_log_det(&u_hat, &w, &scalar(rng.normal()), &z).unwrap();
        assert!(ld.values().iter().all(|v| v.is_finite()));
    }
    // Already-valid directions move only through the smooth reparameterization.
    let u = Tensor::zeros([2]);
    assert_eq!(invertible_u(&u, &Tensor::zeros([2])).unwrap().values(), &[0.0, 0.0]);
}

#[test]
fn planar_identity_and_empty_flow() {
    let mut rng = Rng::seed_from(12);
    let mut flow = PlanarFlow::new(2, 3, &mut rng);
    for l in &mut flow.layers {
        l.u.set_value(&[0.0, 0.0]).unwrap();
        l.w.set_value(&[0.0, 0.0]).unwrap();
    }
    let empty = PlanarFlow::new(2, 0, &mut rng);
    let eps = Tensor::randn([6, 2], &mut rng);
    let tape = Tape::new();
    let a = flow.transform(&tape, &eps).unwrap();
    let b = flow.base.transform(&tape, &eps).unwrap();
    let c = empty.transform(&tape, &eps).unwrap();
    assert_eq!(a.z.values(), b.z.values());
    assert_eq!(a.log_density.unwrap().values(), b.log_density.as_ref().unwrap().values());
    assert_eq!(c.z.values(), b.z.values());
    assert_eq!(c.log_density.unwrap().values(), b.log_density.unwrap().values());
}

#[test]
fn planar_density_integrates_to_one() {
    let mut rng = Rng::seed_from(13);
    let mut flow = PlanarFlow::new(1, 4, &mut rng);
    flow.base.mean.set_value(&[0.4]).unwrap();
    flow.base.log_std.set_value(&[0.3]).unwrap();
    for (i, l) in flow.layers.iter_mut().enumerate() {
        l.u.set_value(&[1.5 - i as f64]).unwrap();
        l.w.set_value(&[1.2]).unwrap();
        l.b.set_value(&[0.5 * i as f64 - 0.7]).unwrap();
    }
    // Push a fine base grid through the (monotone) flow and integrate the
    // transformed density over the image points.
    let grid = Grid::new(-12.0, 12.0, 40_001).unwrap();
    let eps: Vec<f64> = (0..grid.points).map(|i| grid.node(i)).collect();
    let s = flow.transform(&Tape::new(), &Tensor::new(eps, [grid.points, 1]).unwrap()).unwrap();
    let z = s.z.values();
    let q: Vec<f64> = s.log_density.unwrap().values().iter().map(|v| v.exp()).collect();
    assert!(z.windows(2).all(|w| w[1] > w[0]));
    let mass: f64 = (1..z.len()).map(|i| 0.5 * (q[i] + q[i - 1]) * (z[i] - z[i - 1])).sum();
    assert!((mass - 1.0).abs() <= 1e-3, "{mass}");
}

#[test]
fn tractable_family_gradients() {
    let mut rng = Rng::seed_from(14);
    let mut q = MeanFieldGaussian::with_values(&[0.3, -0.2], &[0.1, -0.4]).unwrap();
    assert!(fd_check(&mut q, 5) <= 1e-5);
    let mut flow = PlanarFlow::new(2, 3, &mut rng);
    for l in &mut flow.layers {
        l.u.value_mut().iter_mut().for_each(|v| *v *= 10.0);
        l.w.value_mut().iter_mut().for_each(|v| *v *= 10.0);
    }
    assert!(fd_check(&mut flow, 5) <= 1e-5);
}

#[test]
fn concatenated_blocks() {
    let mut rng = Rng::seed_from(15);
    let parts: Vec<Box<dyn ImplicitPosterior>> = vec![
        Box::new(NoiseNet::new(NoiseNetSpec::mlp(3, &[4], 2, Activation::Relu), &mut rng).unwrap()),
        Box::new(Mmnn::new((2, 2), &[(3, 2)], &mut rng).unwrap()),
    ];
    let mut joint = ConcatPosterior::new(parts).unwrap();
    assert_eq!(joint.dim(), 8);
    assert_eq!(joint.blocks(), vec![2, 6]);
    let s = joint.sample(&Tape::new(), 5, &mut rng).unwrap();
    assert_eq!(s.z.shape(), &[5, 8]);
    assert!(s.log_density.is_none());
    assert!(fd_check(&mut joint, 3) <= 1e-5);

    let gaussians: Vec<Box<dyn ImplicitPosterior>> = vec![
        Box::new(MeanFieldGaussian::new(1)),
        Box::new(MeanFieldGaussian::new(2)),
    ];
    let joint = ConcatPosterior::new(gaussians).unwrap();
    let s = joint.sample(&Tape::new(), 4, &mut Rng::seed_from(16)).unwrap();
    let direct = standard_normal_log_density(&s.z).unwrap();
    for (a, b) in s.log_density.unwrap().values().iter().zip(direct.values()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(ConcatPosterior::new(Vec::new()).is_err());
}

#[test]
fn amortized_samplers() {
    let mut rng = Rng::seed_from(17);
    let x = Matrix::from_rows(&[[1.0, 0.0, 1.0], [0.0, 0.0, 1.0]]).unwrap();
    let spec = NoiseNetSpec {
        inject_after: Some(0),
        ..NoiseNetSpec::mlp(3, &[8], 2, Activation::Relu)
    };
    let mut implicit = AmortizedNoiseNet::new(3, 0, spec, &mut rng).unwrap();
    let s = implicit.sample_given(&Tape::new(), &x, 4, &mut rng).unwrap();
    assert_eq!(s.z.shape(), &[8, 2]);
    assert_eq!(implicit.latent_dim(), 2);
    assert!(AmortizedNoiseNet::new(3, 0, NoiseNetSpec::mlp(3, &[8], 2, Activation::Relu), &mut rng).is_err());
    assert!(implicit.sample_given(&Tape::new(), &Matrix::zeros(2, 2), 4, &mut rng).is_err());
    let err = parameter_gradient_error(
        &mut implicit,
        &|q: &AmortizedNoiseNet, tape: &Tape| summary(&q.sample_given(tape, &x, 3, &mut Rng::seed_from(1)).unwrap()),
        1e-6,
    );
    assert!(err <= 1e-5, "{err}");

    let mut gauss = AmortizedGaussian::new(3, &[5], 2, Activation::Tanh, &mut rng);
    let tape = Tape::new();
    let s = gauss.sample_given(&tape, &x, 3, &mut Rng::seed_from(2)).unwrap();
    let (mean, log_std) = gauss.moments(&tape, &Tensor::from_matrix(&x)).unwrap();
    let lq = s.log_density.as_ref().unwrap().values();
    for i in 0..6 {
        let row = i / 3;
        let mf = MeanFieldGaussian::with_values(&mean.values()[row * 2..][..2], &log_std.values()[row * 2..][..2]).unwrap();
        let z = s.z.narrow(0, i, 1).unwrap();
        let direct = mf.log_density(&Tape::new(), &z.detach()).unwrap();
        assert!((direct.values()[0] - lq[i]).abs() < 1e-12);
    }
    let err = parameter_gradient_error(
        &mut gauss,
        &|q: &AmortizedGaussian, tape: &Tape| summary(&q.sample_given(tape, &x, 3, &mut Rng::seed_from(3)).unwrap()),
        1e-6,
    );
    assert!(err <= 1e-5, "{err}");
}
