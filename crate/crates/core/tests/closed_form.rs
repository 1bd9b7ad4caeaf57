use kivi_core::dre::{fit_ratio, objective_gradient, KernelConfig};
use kivi_core::linalg::Matrix;
use kivi_core::oracles::brute_force_ulsif;
use kivi_core::rng::Rng;

#[test]
fn closed_form_matches_brute_force() {
    let start = std::time::Instant::now();
    let mut worst_coef: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = Rng::seed_from(seed);
        let d = [1, 2, 5][seed as usize % 3];
        let lambda = [0.1, 0.01, 0.003][(seed / 3) as usize % 3];
        let num = Matrix::from_vec(20, d, rng.normals(20 * d)).unwrap();
        let shifted: Vec<f64> = rng.normals(20 * d).into_iter().map(|v| 0.8 * v + 0.5).collect();
        let den = Matrix::from_vec(20, d, shifted).unwrap();
        let m = fit_ratio(&num, &den, &KernelConfig::new(lambda)).unwrap();
        let (alpha, beta) = brute_force_ulsif(&num, &den, m.bandwidth(), lambda).unwrap();
        for (a, b) in m.alpha().iter().chain(m.beta()).zip(alpha.iter().chain(&beta)) {
            worst_coef = worst_coef.max((a - b).abs());
        }
        let g = objective_gradient(m.alpha(), m.beta(), &num, &den, m.bandwidth(), lambda).unwrap();
        worst_residual = worst_residual.max(g.relative_residual());
    }
    println!("max coef diff {worst_coef:e}, max residual {worst_residual:e}, {:?}", start.elapsed());
    assert!(worst_coef <= 1e-5);
    assert!(worst_residual <= 1e-8);
}
