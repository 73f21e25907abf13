//! Rank-1 lattice generating vectors by component-by-component construction.
//!
//! The criterion is the worst-case error in the weighted Korobov space with
//! smoothness 1 (the `P_2` criterion) and product weights `γ_j = j⁻²`:
//!
//! ```text
//! e²(z) = −1 + N⁻¹ Σ_k Π_j (1 + γ_j ω({k z_j / N})),   ω(x) = 2π²(x² − x + 1/6).
//! ```
//!
//! CBC is greedy, so the vector for `d` dimensions is a prefix of the one for
//! `d + 1`; vectors are cached per `N` and extended on demand.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

struct CbcState {
    z: Vec<u64>,
    /// Running products `Π_{j<d} (1 + γ_j ω(k z_j / N))` for every k.
    prod: Vec<f64>,
}

fn cache() -> &'static Mutex<HashMap<u64, CbcState>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, CbcState>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn omega_table(n: u64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let x = k as f64 / n as f64;
            2.0 * PI * PI * (x * x - x + 1.0 / 6.0)
        })
        .collect()
}

fn extend(state: &mut CbcState, n: u64, dim: usize) {
    if state.z.len() >= dim {
        return;
    }
    let omega = omega_table(n);
    // z and N - z give the same point set up to reflection
    let candidates: Vec<u64> = (1..=n / 2).filter(|&c| gcd(c, n) == 1).collect();
    while state.z.len() < dim {
        let j = state.z.len() + 1;
        let gamma = 1.0 / (j * j) as f64;
        let z = if j == 1 {
            1
        } else {
            let mut best = (f64::INFINITY, 1);
            for &c in &candidates {
                let mut e = 0.0;
                let mut idx = 0u64;
                for &pk in &state.prod {
                    e += pk * (1.0 + gamma * omega[idx as usize]);
                    idx += c;
                    if idx >= n {
                        idx -= n;
                    }
                }
                if e < best.0 {
                    best = (e, c);
                }
            }
            best.1
        };
        let mut idx = 0u64;
        for pk in state.prod.iter_mut() {
            *pk *= 1.0 + gamma * omega[idx as usize];
            idx += z;
            if idx >= n {
                idx -= n;
            }
        }
        state.z.push(z);
    }
}

/// Generating vector of length `dim` for an `n`-point lattice.
pub(crate) fn generating_vector(n: u64, dim: usize) -> Vec<u64> {
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    let state = guard.entry(n).or_insert_with(|| CbcState {
        z: Vec::new(),
        prod: vec![1.0; n as usize],
    });
    extend(state, n, dim);
    state.z[..dim].to_vec()
}

/// Squared worst-case error of the lattice `z` (for tests and diagnostics).
#[cfg(test)]
pub(crate) fn p2_error(n: u64, z: &[u64]) -> f64 {
    let omega = omega_table(n);
    let mut total = 0.0;
    for k in 0..n {
        let mut prod = 1.0;
        for (j, &zj) in z.iter().enumerate() {
            let gamma = 1.0 / ((j + 1) * (j + 1)) as f64;
            prod *= 1.0 + gamma * omega[((k * zj) % n) as usize];
        }
        total += prod;
    }
    total / n as f64 - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_property_and_coprimality() {
        let long = generating_vector(257, 6);
        let short = generating_vector(257, 3);
        assert_eq!(&long[..3], &short[..]);
        assert_eq!(long[0], 1);
        assert!(long.iter().all(|&z| gcd(z, 257) == 1 && z <= 128));
    }

    #[test]
    fn cbc_beats_a_naive_vector() {
        let n = 1024;
        let z = generating_vector(n, 4);
        let naive = [1, 3, 5, 7];
        assert!(p2_error(n, &z) < p2_error(n, &naive));
    }

    #[test]
    fn each_component_is_optimal_given_the_prefix() {
        let n = 128;
        let z = generating_vector(n, 3);
        let best = p2_error(n, &z);
        for c in (1..=n / 2).filter(|&c| gcd(c, n) == 1) {
            let alt = [z[0], z[1], c];
            assert!(p2_error(n, &alt) >= best - 1e-12);
        }
    }
}
