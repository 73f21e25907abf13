//! Power of the spacing test.
//!
//! For `U ~ N_p(μ*, R)` the rejection probability has the exact form
//!
//! ```text
//! P{S ≤ α} = α · E[ exp(ε μ*_i h_α(ε U_i)) ],   h_α(ℓ) = Φ̄⁻¹(α Φ̄(ℓ)) − ℓ,
//! ```
//!
//! with `(i, ε)` the signed argmax of `|U|`. [`spacing_power`] evaluates the
//! expectation with the randomized lattice rule of [`crate::qmcint`];
//! [`spacing_power_direct`] counts rejections by brute force; [`power_2d`]
//! integrates the two-predictor rejection region by quadrature; and
//! [`chisq_power`] is the closed-form power of Pearson's `‖Y‖²` test.

mod quadrature;
mod region;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::distfn::{self, normal};
use crate::error::{check_finite, check_level, Error, Result};
use crate::qmcint::{
    factor_covariance, gaussian_expectation, sample_gaussian, shift_rng, GaussianFactor,
    IntegratorConfig,
};
use crate::spacing::spacing_pvalue;

pub use region::{power_2d, Piece, Region2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mcqmc,
    DirectMc,
    Quad2d,
    ClosedForm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mcqmc => "mcqmc",
            Method::DirectMc => "direct_mc",
            Method::Quad2d => "quad2d",
            Method::ClosedForm => "closed_form",
        })
    }
}

/// A probability estimate with its standard error and sampling budget.
///
/// `stderr` is zero for deterministic methods; `budget` counts integrand
/// evaluations or simulated draws (zero for quadrature and closed forms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerEstimate {
    pub value: f64,
    pub stderr: f64,
    pub budget: u64,
    pub method: Method,
}

/// `h_α` without domain checks; finite whenever `α Φ̄(ℓ) < 1`.
pub(crate) fn h_alpha_unchecked(l: f64, alpha: f64) -> f64 {
    let log_q = alpha.ln() + normal::log_sf(l);
    if log_q >= 0.0 {
        return f64::NEG_INFINITY;
    }
    normal::isf_log(log_q) - l
}

/// `g_α` without domain checks.
pub(crate) fn g_alpha_unchecked(x: f64, alpha: f64) -> f64 {
    let log_q = normal::log_sf(x) - alpha.ln();
    if log_q >= 0.0 {
        return f64::NEG_INFINITY;
    }
    normal::isf_log(log_q)
}

fn check_alpha_closed(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(alpha)
    } else {
        Err(Error::Domain {
            what: "level (need 0 < alpha <= 1)",
            value: alpha,
        })
    }
}

/// `h_α(ℓ) = Φ̄⁻¹(α Φ̄(ℓ)) − ℓ` for `ℓ ≥ Φ̄⁻¹(α/2)`.
pub fn h_alpha(l: f64, alpha: f64) -> Result<f64> {
    let alpha = check_alpha_closed(alpha)?;
    check_finite(l, "h_alpha")?;
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let lo = normal::isf(alpha / 2.0);
    if l < lo {
        return Err(Error::Domain {
            what: "h_alpha argument (need l >= isf(alpha/2))",
            value: l,
        });
    }
    Ok(h_alpha_unchecked(l, alpha).max(0.0))
}

/// `g_α(x) = Φ̄⁻¹(Φ̄(x)/α)` for `Φ̄(x) ≤ α`.
pub fn g_alpha(x: f64, alpha: f64) -> Result<f64> {
    let alpha = check_alpha_closed(alpha)?;
    check_finite(x, "g_alpha")?;
    if alpha == 1.0 {
        return Ok(x);
    }
    if normal::log_sf(x) > alpha.ln() {
        return Err(Error::Domain {
            what: "g_alpha argument (need sf(x) <= alpha)",
            value: x,
        });
    }
    Ok(g_alpha_unchecked(x, alpha))
}

/// `exp(ε μ*_i h_α(ε u_i))` with `(i, ε)` the signed argmax of `|u|`.
pub fn cone_weight(u: &[f64], mu: &[f64], alpha: f64) -> f64 {
    let mut best = 0;
    let mut best_abs = f64::NEG_INFINITY;
    for (k, v) in u.iter().enumerate() {
        if v.abs() > best_abs {
            best = k;
            best_abs = v.abs();
        }
    }
    let eps = if u[best] < 0.0 { -1.0 } else { 1.0 };
    let mu_i = mu[best];
    if mu_i == 0.0 {
        return 1.0;
    }
    (eps * mu_i * h_alpha_unchecked(eps * u[best], alpha)).exp()
}

fn check_mu_r(mu: &DVector<f64>, r: &DMatrix<f64>) -> Result<()> {
    if r.shape() != (mu.len(), mu.len()) {
        return Err(Error::Shape {
            context: "power",
            expected: format!("{p}x{p} correlation matrix for a mean of length {p}", p = mu.len()),
            found: format!("{}x{}", r.nrows(), r.ncols()),
        });
    }
    if mu.iter().chain(r.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("power"));
    }
    Ok(())
}

/// Smallest eigenvalue tolerated in `R` before it is rejected as not PSD.
const PSD_TOL: f64 = 1e-8;

fn psd_factor(r: &DMatrix<f64>) -> Result<GaussianFactor> {
    let eig = crate::linalg::SortedEigen::new(r)?;
    if eig.min() < -PSD_TOL {
        return Err(Error::NotPsd(eig.min()));
    }
    factor_covariance(r, None)
}

/// `P{S ≤ α}` for `U ~ N(μ*, R)` by randomized lattice integration.
pub fn spacing_power(
    mu: &DVector<f64>,
    r: &DMatrix<f64>,
    alpha: f64,
    cfg: &IntegratorConfig,
) -> Result<PowerEstimate> {
    check_mu_r(mu, r)?;
    let gf = psd_factor(r)?.with_mean(mu.clone())?;
    spacing_power_factor(&gf, alpha, cfg)
}

/// As [`spacing_power`], for a precomputed factor whose mean is `μ*`.
pub fn spacing_power_factor(gf: &GaussianFactor, alpha: f64, cfg: &IntegratorConfig) -> Result<PowerEstimate> {
    let alpha = check_level(alpha)?;
    let mu = gf.mean.as_slice();
    let est = gaussian_expectation(|u| cone_weight(u, mu, alpha), gf, cfg)?;
    Ok(PowerEstimate {
        value: (alpha * est.value).clamp(0.0, 1.0),
        stderr: alpha * est.stderr,
        ..est
    })
}

/// Draws per parallel chunk in [`spacing_power_direct`].
const DIRECT_CHUNK: usize = 4096;

/// Empirical frequency of `{S ≤ α}` over `nrep` draws of `U ~ N(μ*, R)`.
pub fn spacing_power_direct(
    mu: &DVector<f64>,
    r: &DMatrix<f64>,
    alpha: f64,
    nrep: usize,
    seed: u64,
) -> Result<PowerEstimate> {
    let alpha = check_level(alpha)?;
    check_mu_r(mu, r)?;
    if nrep == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    let gf = psd_factor(r)?.with_mean(mu.clone())?;
    let chunks = nrep.div_ceil(DIRECT_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = shift_rng(seed, c as u64);
            let len = DIRECT_CHUNK.min(nrep - c * DIRECT_CHUNK);
            let mut hits = 0;
            for _ in 0..len {
                let u = sample_gaussian(&gf, &mut rng);
                if spacing_pvalue(&u, r)?.p_value <= alpha {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(binomial_estimate(hits, nrep))
}

pub(crate) fn binomial_estimate(hits: usize, n: usize) -> PowerEstimate {
    let p = hits as f64 / n as f64;
    PowerEstimate {
        value: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
        budget: n as u64,
        method: Method::DirectMc,
    }
}

/// Power of the level-α test rejecting when `‖Y‖² > χ²_{n, 1−α}`, for
/// `‖Y‖² ~ χ²(n, ncp)`.
pub fn chisq_power(ncp: f64, n: u32, alpha: f64) -> Result<PowerEstimate> {
    let alpha = check_level(alpha)?;
    let c = distfn::chisq_isf(alpha, n)?;
    let value = distfn::chisq_sf(c, n, ncp)?;
    Ok(PowerEstimate {
        value,
        stderr: 0.0,
        budget: 0,
        method: Method::ClosedForm,
    })
}
