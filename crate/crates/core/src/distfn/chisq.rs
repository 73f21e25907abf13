use super::normal;
use super::special::{gamma_inc, ln_gamma, solve_bracketed};

/// Relative truncation threshold for the Poisson mixture.
const SERIES_TOL: f64 = 1e-16;

pub(crate) fn central_sf(x: f64, k: f64) -> f64 {
    gamma_inc(0.5 * k, 0.5 * x).1
}

fn central_log_pdf(x: f64, k: f64) -> f64 {
    let a = 0.5 * k;
    (a - 1.0) * x.ln() - 0.5 * x - a * std::f64::consts::LN_2 - ln_gamma(a)
}

/// Survival function of the noncentral chi-squared law as a Poisson(ncp/2)
/// mixture of central laws with k + 2j degrees of freedom.
///
/// Summation starts at the Poisson mode and walks outwards; each direction
/// stops once its contribution bound drops below `SERIES_TOL` of the sum.
pub(crate) fn sf(x: f64, k: f64, ncp: f64) -> f64 {
    if ncp == 0.0 {
        return central_sf(x, k);
    }
    if x <= 0.0 {
        return 1.0;
    }
    let half = 0.5 * ncp;
    let ln_half = half.ln();
    let weight = |j: f64| (-half + j * ln_half - ln_gamma(j + 1.0)).exp();
    let mode = half.floor();

    let mut sum = 0.0;
    // upward: Q <= 1, so the Poisson weight bounds each term; the Poisson
    // tail beyond j is bounded by w_j / (1 - half / (j + 1)).
    let mut j = mode;
    loop {
        let w = weight(j);
        sum += w * central_sf(x, k + 2.0 * j);
        let ratio = half / (j + 1.0);
        let tail_bound = if ratio < 1.0 { w * ratio / (1.0 - ratio) } else { w };
        if tail_bound < SERIES_TOL * sum || w == 0.0 {
            break;
        }
        j += 1.0;
    }
    // downward: both weights and Q decrease.
    let mut j = mode - 1.0;
    while j >= 0.0 {
        let term = weight(j) * central_sf(x, k + 2.0 * j);
        sum += term;
        if term < SERIES_TOL * sum {
            break;
        }
        j -= 1.0;
    }
    sum.min(1.0)
}

/// Inverse survival function of the central law: solves Q(k/2, x/2) = p.
pub(crate) fn central_isf(p: f64, k: f64) -> f64 {
    // Wilson-Hilferty seed
    let z = normal::isf(p);
    let c = 2.0 / (9.0 * k);
    let seed = (k * (1.0 - c + z * c.sqrt()).powi(3)).max(1e-8);
    let mut hi = seed.max(k) * 2.0 + 10.0;
    while central_sf(hi, k) > p {
        hi *= 2.0;
    }
    solve_bracketed(
        |x| (central_sf(x, k) - p, -central_log_pdf(x, k).exp()),
        seed,
        0.0,
        hi,
        1e-15,
    )
}
