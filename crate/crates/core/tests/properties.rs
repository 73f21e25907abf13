use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spacing_core::distfn::norm_isf;
use spacing_core::knots::{knots, second_knot};
use spacing_core::model::{gram, normalize_design};
use spacing_core::power::g_alpha;
use spacing_core::spacing::spacing_pvalue;

fn design(n: usize, p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    normalize_design(&raw, None).unwrap()
}

fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `(U, R)` for `Y ~ N(0, I)` against a random unit-column design.
fn instance(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = design(n, p, &mut rng);
    let y = gaussian(n, &mut rng);
    let u = x.tr_mul(&y);
    let r = x.tr_mul(&x);
    (x, u, r)
}

fn flip(u: &DVector<f64>, r: &DMatrix<f64>, k: usize) -> (DVector<f64>, DMatrix<f64>) {
    let mut u = u.clone();
    let mut r = r.clone();
    u[k] = -u[k];
    r.row_mut(k).neg_mut();
    r.column_mut(k).neg_mut();
    (u, r)
}

#[test]
fn knot_support_on_random_instances() {
    for seed in 0..10_000u64 {
        let (_, u, r) = instance(8, 6, seed);
        let k = knots(&u, &r).unwrap();
        assert!(
            0.0 <= k.lambda2 && k.lambda2 <= k.lambda1,
            "seed {seed}: {k:?}"
        );
    }
}

#[test]
fn rejection_event_matches_knot_description() {
    let mut checked = 0;
    for seed in 0..10_000u64 {
        let (_, u, r) = instance(10, 6, seed);
        let s = spacing_pvalue(&u, &r).unwrap();
        let (l1, l2) = (s.knots.lambda1, s.knots.lambda2);
        for alpha in [0.01, 0.05, 0.5] {
            let event = l1 >= norm_isf(alpha / 2.0).unwrap() && l2 <= g_alpha(l1, alpha).unwrap();
            assert_eq!(s.p_value <= alpha, event, "seed {seed}, α={alpha}: {s:?}");
            checked += usize::from(event);
        }
    }
    assert!(checked > 1000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn second_knot_below_first(seed in any::<u64>(), n in 3usize..12, p in 2usize..9) {
        let (_, u, r) = instance(n, p, seed);
        let k = knots(&u, &r).unwrap();
        let l2 = second_knot(&u, &r, k.i_hat, k.eps_hat).unwrap();
        prop_assert!(l2 < f64::from(k.eps_hat) * u[k.i_hat]);
        prop_assert!(l2 >= 0.0);
    }

    #[test]
    fn sign_flips_leave_knots_and_pivot(seed in any::<u64>(), pattern in any::<u16>()) {
        let (_, u, r) = instance(9, 7, seed);
        let base = spacing_pvalue(&u, &r).unwrap();
        let (mut uf, mut rf) = (u.clone(), r.clone());
        for k in 0..7 {
            if pattern >> k & 1 == 1 {
                (uf, rf) = flip(&uf, &rf, k);
            }
        }
        let flipped = spacing_pvalue(&uf, &rf).unwrap();
        prop_assert_eq!(flipped.knots.i_hat, base.knots.i_hat);
        prop_assert_eq!(flipped.knots.lambda1, base.knots.lambda1);
        prop_assert!((flipped.knots.lambda2 - base.knots.lambda2).abs() <= 1e-12 * (1.0 + base.knots.lambda2));
        prop_assert!((flipped.p_value - base.p_value).abs() <= 1e-12 * base.p_value.max(1e-300));
    }

    #[test]
    fn column_permutation_leaves_pivot(seed in any::<u64>(), rot in 1usize..6) {
        let (_, u, r) = instance(8, 6, seed);
        let perm: Vec<usize> = (0..6).map(|j| (j + rot) % 6).collect();
        let up = DVector::from_fn(6, |j, _| u[perm[j]]);
        let rp = DMatrix::from_fn(6, 6, |a, b| r[(perm[a], perm[b])]);
        let s = spacing_pvalue(&u, &r).unwrap();
        let sp = spacing_pvalue(&up, &rp).unwrap();
        prop_assert_eq!(perm[sp.knots.i_hat], s.knots.i_hat);
        prop_assert!((sp.p_value - s.p_value).abs() <= 1e-12 * s.p_value.max(1e-300));
    }

    #[test]
    fn normalization_is_idempotent_with_unit_diagonal(seed in any::<u64>(), n in 2usize..10, p in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = DMatrix::from_fn(n, p, |_, _| 10.0 * rng.sample::<f64, _>(StandardNormal));
        let once = normalize_design(&raw, None).unwrap();
        let twice = normalize_design(&once, None).unwrap();
        prop_assert!((&once - &twice).amax() <= 1e-14);
        let g = gram(&once, None).unwrap();
        for j in 0..p {
            prop_assert!((g[(j, j)] - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn orthogonal_second_knot_is_runner_up(values in prop::collection::vec(-6.0f64..6.0, 2..10)) {
        let u = DVector::from_vec(values);
        let r = DMatrix::identity(u.len(), u.len());
        let k = knots(&u, &r).unwrap();
        let mut abs: Vec<f64> = u.iter().map(|v| v.abs()).collect();
        abs.sort_by(|a, b| b.total_cmp(a));
        prop_assert_eq!(k.lambda1, abs[0]);
        prop_assert_eq!(k.lambda2, abs[1]);
    }
}
