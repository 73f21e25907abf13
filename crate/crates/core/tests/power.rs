use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spacing_core::power::{chisq_power, power_2d, spacing_power, spacing_power_direct, PowerEstimate};
use spacing_core::qmcint::IntegratorConfig;

fn corr(rho: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])
}

fn assert_agree(a: &PowerEstimate, b: &PowerEstimate, context: &str) {
    let se = a.stderr.hypot(b.stderr);
    assert!(
        (a.value - b.value).abs() <= 3.0 * se + 1e-8,
        "{context}: {a:?} vs {b:?}"
    );
}

/// Correlation matrix of a random unit-column design with `n > p`.
fn random_correlation(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let x = spacing_core::simlab::gen_design(p + 3, p, rng);
    x.tr_mul(&x)
}

#[test]
fn lattice_and_direct_agree_on_random_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let cfg = IntegratorConfig::new(1 << 12, 25, 42).unwrap();
    for p in [2, 5] {
        for k in 0..5 {
            let r = random_correlation(p, &mut rng);
            let mu = DVector::from_fn(p, |_, _| 1.5 * rng.sample::<f64, _>(StandardNormal));
            let alpha = [0.01, 0.05, 0.1, 0.05, 0.2][k];
            let qmc = spacing_power(&mu, &r, alpha, &cfg).unwrap();
            let direct = spacing_power_direct(&mu, &r, alpha, 100_000, 43 + k as u64).unwrap();
            assert_agree(&qmc, &direct, &format!("p={p}, μ*={mu:?}"));
            assert!(qmc.value >= alpha - 3.0 * qmc.stderr, "unbiasedness {qmc:?}");
        }
    }
}

#[test]
fn single_strong_coordinate_against_direct() {
    let mu = DVector::from_column_slice(&[2.0, 0.0]);
    let r = DMatrix::identity(2, 2);
    let qmc = spacing_power(&mu, &r, 0.05, &IntegratorConfig::default()).unwrap();
    let direct = spacing_power_direct(&mu, &r, 0.05, 100_000, 44).unwrap();
    assert_agree(&qmc, &direct, "μ* = (2, 0)");
}

#[test]
fn direct_saturates_for_large_signal() {
    let mu = DVector::from_column_slice(&[8.0, 0.0]);
    let p = spacing_power_direct(&mu, &DMatrix::identity(2, 2), 0.05, 10_000, 45).unwrap();
    assert!(p.value >= 0.99, "{p:?}");
}

#[test]
fn quadrature_against_million_draws() {
    let beta = [1.5, 0.5];
    let r = corr(0.5);
    let mu = &r * DVector::from_column_slice(&beta);
    let quad = power_2d(beta, 0.5, 0.05).unwrap();
    let direct = spacing_power_direct(&mu, &r, 0.05, 1_000_000, 46).unwrap();
    assert_agree(&quad, &direct, "β = (1.5, 0.5), ρ = 0.5");
}

#[test]
fn quadrature_is_symmetric_and_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for _ in 0..40 {
        let beta = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let rho = rng.random_range(-0.9..0.9);
        let a = power_2d(beta, rho, 0.05).unwrap().value;
        let b = power_2d([-beta[0], -beta[1]], rho, 0.05).unwrap().value;
        assert!((a - b).abs() <= 1e-8, "β={beta:?} ρ={rho}");
        assert!(a >= 0.05 - 1e-6, "β={beta:?} ρ={rho}: {a}");
    }
}

#[test]
fn chisq_power_increases_with_noncentrality() {
    let mut prev = chisq_power(0.0, 7, 0.05).unwrap().value;
    assert!((prev - 0.05).abs() < 1e-12);
    for k in 1..=60 {
        let cur = chisq_power(0.5 * k as f64, 7, 0.05).unwrap().value;
        assert!(cur > prev || (prev > 1.0 - 1e-12 && cur > prev - 1e-13), "ncp {}", 0.5 * k as f64);
        prev = cur;
    }
}
