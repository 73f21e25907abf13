use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spacing_core::distfn::{chisq_isf, chisq_sf, norm_sf};
use spacing_core::power::chisq_power;

const DRAWS: usize = 1_000_000;

/// `‖Z + μ‖²` for `Z ~ N(0, I₂)` and `μ = (√5, 0)`, so that `ncp = 5`.
fn noncentral_draws(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = 5f64.sqrt();
    (0..DRAWS)
        .map(|_| {
            let a: f64 = rng.sample::<f64, _>(StandardNormal) + shift;
            let b: f64 = rng.sample(StandardNormal);
            a * a + b * b
        })
        .collect()
}

fn within_three_se(freq: f64, target: f64) -> bool {
    let se = (target * (1.0 - target) / DRAWS as f64).sqrt();
    (freq - target).abs() <= 3.0 * se
}

#[test]
fn noncentral_sf_matches_sampling() {
    let draws = noncentral_draws(7);
    let freq = draws.iter().filter(|&&v| v > 5.0).count() as f64 / DRAWS as f64;
    let sf = chisq_sf(5.0, 2, 5.0).unwrap();
    assert!(within_three_se(freq, sf), "sf {sf} vs frequency {freq}");
}

#[test]
fn chisq_power_matches_sampling() {
    let draws = noncentral_draws(8);
    let c = chisq_isf(0.05, 2).unwrap();
    let freq = draws.iter().filter(|&&v| v > c).count() as f64 / DRAWS as f64;
    let power = chisq_power(5.0, 2, 0.05).unwrap().value;
    assert!(within_three_se(freq, power), "power {power} vs frequency {freq}");
}

#[test]
fn central_case_of_noncentral_law() {
    for k in [1u32, 2, 3, 10, 49] {
        for x in [0.1, 1.0, 2.0, 7.5, 30.0] {
            let sf = chisq_sf(x, k, 0.0).unwrap();
            assert!((0.0..=1.0).contains(&sf));
            if k == 2 {
                assert!((sf - (-x / 2.0f64).exp()).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn chi_square_with_one_degree_is_a_squared_normal() {
    for x in [0.25, 1.0, 4.0, 9.0] {
        let sf = chisq_sf(x, 1, 0.0).unwrap();
        let expected = 2.0 * norm_sf(f64::sqrt(x)).unwrap();
        assert!((sf - expected).abs() < 1e-13, "x={x}: {sf} vs {expected}");
    }
}
