use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spacing_core::simlab::gen_design;
use spacing_core::spacing::spacing_pvalue;
use spacing_core::tspacing::{sigma_hat, t_spacing_pvalue};

fn noise(n: usize, sigma: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| sigma * rng.sample::<f64, _>(StandardNormal))
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// For a fixed column, `σ̂²(n−1)/σ² ~ χ²(n−1)`. At the selected column the
/// mean is smaller: selection favours `Y` aligned with `X_î`.
#[test]
fn sigma_hat_squared_is_unbiased_under_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let sq: Vec<f64> = (0..2000)
        .map(|_| {
            let x = gen_design(50, 100, &mut rng);
            let y = noise(50, 1.0, &mut rng);
            let u = x.tr_mul(&y);
            sigma_hat(&x, &u, &x.tr_mul(&x), 0).unwrap().powi(2)
        })
        .collect();
    let (m, sd) = mean_sd(&sq);
    let se = sd / (sq.len() as f64).sqrt();
    assert!((m - 1.0).abs() <= 3.0 * se, "mean σ̂² = {m} ± {se}");
}

#[test]
fn sigma_hat_is_homogeneous() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let x = gen_design(12, 20, &mut rng);
    let y = noise(12, 1.0, &mut rng);
    let r = x.tr_mul(&x);
    let u = x.tr_mul(&y);
    let base = sigma_hat(&x, &u, &r, 4).unwrap();
    for c in [0.3, 7.0, 1e5] {
        let scaled = sigma_hat(&x, &(&u * c), &r, 4).unwrap();
        assert!((scaled - c * base).abs() <= 1e-12 * c * base);
    }
}

#[test]
fn t_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..50 {
        let x = gen_design(20, 40, &mut rng);
        let y = noise(20, 1.0, &mut rng);
        let base = t_spacing_pvalue(&x, &y).unwrap().p_value;
        for c in [0.37, 3.0, 1e3] {
            let t = t_spacing_pvalue(&x, &(&y * c)).unwrap().p_value;
            assert!((t - base).abs() <= 1e-12 * base.max(1e-300), "{t} vs {base}");
        }
        for c in [0.125, 2.0, 64.0] {
            assert_eq!(t_spacing_pvalue(&x, &(&y * c)).unwrap().p_value, base);
        }
    }
}

fn correlation(pairs: &[(f64, f64)]) -> f64 {
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (ma, sa) = mean_sd(&a);
    let (mb, sb) = mean_sd(&b);
    let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0);
    cov / (sa * sb)
}

/// For fixed `(i, ε)`, `εU_i` and `σ̂_i` are independent.
#[test]
fn fixed_column_correlate_and_scale_are_uncorrelated() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let x = gen_design(50, 100, &mut rng);
    let r = x.tr_mul(&x);
    let pairs: Vec<(f64, f64)> = (0..5000)
        .map(|_| {
            let u = x.tr_mul(&noise(50, 1.0, &mut rng));
            (u[7], sigma_hat(&x, &u, &r, 7).unwrap())
        })
        .collect();
    let corr = correlation(&pairs);
    assert!(corr.abs() < 4.0 / 5000f64.sqrt(), "corr = {corr}");
}

/// Restricted to the most frequent selection cell of a fixed design.
/// Conditioning on `εU_î > λ2 = σ̂·(λ2/σ̂)` couples the two, so this is a
/// weak-dependence check rather than an exact consequence, and it fails.
#[test]
#[ignore = "selection induces dependence between the selected correlate and the scale"]
fn selected_correlate_and_scale_are_nearly_uncorrelated() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let x = gen_design(50, 100, &mut rng);
    let mut cells: HashMap<(usize, i8), Vec<(f64, f64)>> = HashMap::new();
    for _ in 0..5000 {
        let y = noise(50, 1.0, &mut rng);
        let t = t_spacing_pvalue(&x, &y).unwrap();
        cells
            .entry((t.knots.i_hat, t.knots.eps_hat))
            .or_default()
            .push((t.knots.lambda1, t.sigma_hat));
    }
    let pairs = cells.values().max_by_key(|v| v.len()).unwrap();
    let corr = correlation(pairs);
    assert!(corr.abs() < 0.1, "corr = {corr} over {} replicates", pairs.len());
}

/// Fails as written: with `p − 1 < n`, `R_{−î}` has rank `p − 1` while the
/// divisor stays `√(n − 1)`, so σ̂ is far too small.
#[test]
#[ignore = "the rank hypothesis cannot hold at n = 5000, p = 20"]
fn large_n_t_close_to_s() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let reps = 200;
    let mut close = 0;
    for _ in 0..reps {
        let x = gen_design(5000, 20, &mut rng);
        let y = noise(5000, 1.0, &mut rng);
        let u = x.tr_mul(&y);
        let s = spacing_pvalue(&u, &x.tr_mul(&x)).unwrap().p_value;
        let t = t_spacing_pvalue(&x, &y).unwrap().p_value;
        close += usize::from((t - s).abs() < 0.02);
    }
    assert!(close as f64 >= 0.95 * reps as f64, "{close}/{reps}");
}

#[test]
fn identity_design_example() {
    let x = DMatrix::identity(2, 2);
    let t = t_spacing_pvalue(&x, &DVector::from_column_slice(&[2.0, 1.0])).unwrap();
    assert_eq!((t.t1, t.t2, t.sigma_hat), (2.0, 1.0, 1.0));
    assert!((t.p_value - 0.590_334_470_601_733_2).abs() < 1e-12);
}
