//! The t-spacing pivot for unknown noise scale (`Σ = σ²·I`).
//!
//! σ is estimated from the part of `Y` orthogonal to the selected column:
//! with `R_{−i} = X_{−i}ᵀ(I − X_iX_iᵀ)X_{−i}` and `V_{−i,j} = U_j − R_ji U_i`,
//! `σ̂ = ‖R_{−i}^{+1/2} V_{−i}‖ / √(n−1)`. The pivot is
//! `T = F̄_{n−1}(λ1/σ̂) / F̄_{n−1}(λ2/σ̂)` with `F̄` the Student survival function.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::distfn::{student, LogProb};
use crate::error::{Error, Result};
use crate::knots::{knots, KnotResult};
use crate::linalg::{check_square, default_rel_tol, max_asymmetry, SortedEigen};
use crate::model::correlate;

/// Accepted deviation of `‖X_i‖²` from one.
pub const UNIT_COLUMN_TOL: f64 = 1e-10;
/// σ̂ at or below this is reported as degenerate.
pub const SIGMA_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TSpacingResult {
    pub p_value: f64,
    pub t1: f64,
    pub t2: f64,
    pub sigma_hat: f64,
    #[serde(flatten)]
    pub knots: KnotResult,
    #[serde(skip)]
    pub log_p: LogProb,
    /// Rank of `R_{−î}` after the eigenvalue cut-off; the null law is only
    /// guaranteed when it equals `n − 1` for every column.
    #[serde(skip)]
    pub effective_rank: usize,
}

fn check_index(x: &DMatrix<f64>, i: usize) -> Result<()> {
    if i >= x.ncols() {
        return Err(Error::Shape {
            context: "reduced gram",
            expected: format!("column index below {}", x.ncols()),
            found: i.to_string(),
        });
    }
    Ok(())
}

fn drop_column(x: &DMatrix<f64>, i: usize) -> Result<DMatrix<f64>> {
    check_index(x, i)?;
    Ok(x.clone().remove_column(i))
}

/// `X_{−i}` with each column projected off `X_i`. Assumes `‖X_i‖ = 1`.
fn projected_columns(x: &DMatrix<f64>, i: usize) -> Result<DMatrix<f64>> {
    let xi = x.column(i).into_owned();
    let mut z = drop_column(x, i)?;
    let proj = z.tr_mul(&xi);
    z.ger(-1.0, &xi, &proj, 1.0);
    Ok(z)
}

/// `R_{−i}`, computed as the Gram matrix of the columns of `X_{−i}` projected
/// off `X_i`. Assumes `‖X_i‖ = 1`.
pub fn reduced_gram(x: &DMatrix<f64>, i: usize) -> Result<DMatrix<f64>> {
    let z = projected_columns(x, i)?;
    let g = z.tr_mul(&z);
    Ok((&g + g.transpose()) * 0.5)
}

/// Symmetric `A = M^{+1/2}` with `A·M·A` the projector onto `range(M)`.
///
/// Eigenvalues at or below `rel_tol · λ_max` are treated as zero; `None`
/// selects `64·dim·ε`. Returns `A` and the retained rank.
pub fn pinv_sqrt(m: &DMatrix<f64>, rel_tol: Option<f64>) -> Result<(DMatrix<f64>, usize)> {
    check_square(m, "pinv_sqrt")?;
    let asym = max_asymmetry(m);
    if asym > 1e-8 {
        return Err(Error::Asymmetric(asym));
    }
    let eig = SortedEigen::new(m)?;
    let rank = eig.effective_rank(rel_tol.unwrap_or_else(|| default_rel_tol(m.nrows())));
    let q = eig.vectors.columns(0, rank);
    let scaled = DMatrix::from_fn(m.nrows(), rank, |r, c| q[(r, c)] / eig.values[c].sqrt());
    Ok((&scaled * q.transpose(), rank))
}

/// `V_{−i}`: entries `U_j − R_ji U_i` for `j ≠ i`.
fn residual_correlations(u: &DVector<f64>, r: &DMatrix<f64>, i: usize) -> DVector<f64> {
    let ui = u[i];
    DVector::from_iterator(
        u.len() - 1,
        (0..u.len()).filter(|&j| j != i).map(|j| u[j] - r[(j, i)] * ui),
    )
}

/// `‖R_{−i}^{+1/2} V‖²` and the rank of `R_{−i} = ZᵀZ`.
///
/// When `n < p − 1` the `n × n` matrix `K = ZZᵀ` is decomposed instead: it
/// has the same nonzero spectrum, and `‖R^{+1/2}V‖ = ‖K⁺ZV‖`.
fn whitened_norm_sq(x: &DMatrix<f64>, v: &DVector<f64>, i: usize) -> Result<(f64, usize)> {
    let (n, p) = x.shape();
    if n >= p - 1 {
        let (a, rank) = pinv_sqrt(&reduced_gram(x, i)?, None)?;
        let w = a * v;
        return Ok((w.iter().map(|t| t * t).sum(), rank));
    }
    let z = projected_columns(x, i)?;
    let k = &z * z.transpose();
    let eig = SortedEigen::new(&((&k + k.transpose()) * 0.5))?;
    let rank = eig.effective_rank(default_rel_tol(p - 1));
    let c = eig.vectors.columns(0, rank).tr_mul(&(&z * v));
    let sum = c.iter().zip(eig.values.iter()).map(|(c, l)| (c / l).powi(2)).sum();
    Ok((sum, rank))
}

/// σ̂ and the effective rank of `R_{−i}`.
pub(crate) fn sigma_hat_with_rank(
    x: &DMatrix<f64>,
    u: &DVector<f64>,
    r: &DMatrix<f64>,
    i: usize,
) -> Result<(f64, usize)> {
    check_index(x, i)?;
    let n = x.nrows();
    let (sum_sq, rank) = whitened_norm_sq(x, &residual_correlations(u, r, i), i)?;
    let s = sum_sq.sqrt() / ((n - 1) as f64).sqrt();
    if s.is_nan() || s <= SIGMA_FLOOR {
        return Err(Error::DegenerateScale(s));
    }
    Ok((s, rank))
}

/// The noise-scale estimate σ̂ for selected column `i`.
pub fn sigma_hat(x: &DMatrix<f64>, u: &DVector<f64>, r: &DMatrix<f64>, i: usize) -> Result<f64> {
    check_inputs(x)?;
    sigma_hat_with_rank(x, u, r, i).map(|(s, _)| s)
}

fn check_inputs(x: &DMatrix<f64>) -> Result<()> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::Domain {
            what: "number of observations (need n >= 2)",
            value: n as f64,
        });
    }
    if p < 2 {
        return Err(Error::Shape {
            context: "t-spacing design",
            expected: "at least 2 columns".into(),
            found: p.to_string(),
        });
    }
    for (j, c) in x.column_iter().enumerate() {
        let sq = c.norm_squared();
        if !sq.is_finite() {
            return Err(Error::NonFinite("design matrix"));
        }
        if (sq - 1.0).abs() > UNIT_COLUMN_TOL {
            return Err(Error::NotNormalized {
                index: j,
                norm_sq: sq,
            });
        }
    }
    Ok(())
}

/// The t-spacing p-value without logging.
pub(crate) fn t_spacing_quiet(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<TSpacingResult> {
    check_inputs(x)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response vector"));
    }
    let n = x.nrows();
    let u = correlate(x, y)?;
    let r = x.tr_mul(x);
    let k = knots(&u, &r)?;
    let (sigma_hat, effective_rank) = sigma_hat_with_rank(x, &u, &r, k.i_hat)?;
    let t1 = k.lambda1 / sigma_hat;
    let t2 = k.lambda2 / sigma_hat;
    let nu = (n - 1) as f64;
    let log_p = LogProb::saturating(
        (student::log_sf(t1, nu) - student::log_sf(t2, nu)).min(0.0),
    );
    Ok(TSpacingResult {
        p_value: log_p.prob(),
        t1,
        t2,
        sigma_hat,
        knots: k,
        log_p,
        effective_rank,
    })
}

/// Rank of `X_{−i}`, which the null law of T needs to equal `n`.
fn rank_without(x: &DMatrix<f64>, i: usize) -> Result<usize> {
    let (n, p) = x.shape();
    if p - 1 < n {
        return Ok(p - 1);
    }
    let z = drop_column(x, i)?;
    let k = &z * z.transpose();
    let eig = SortedEigen::new(&((&k + k.transpose()) * 0.5))?;
    Ok(eig.effective_rank(default_rel_tol(p - 1)))
}

/// The t-spacing p-value of `Y` against a unit-column design `X`.
///
/// Proceeds with a warning when `X_{−î}` does not have rank `n` or `R_{−î}`
/// does not have rank `n − 1`; the former always happens when `p − 1 < n`.
pub fn t_spacing_pvalue(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<TSpacingResult> {
    let res = t_spacing_quiet(x, y)?;
    let n = x.nrows();
    let rank = rank_without(x, res.knots.i_hat)?;
    if rank != n || res.effective_rank != n - 1 {
        log::warn!(
            "rank hypothesis fails: X_{{-i}} has rank {rank} (need n = {n}) and R_{{-i}} has \
             effective rank {} (need n - 1 = {}); the null law of T is not guaranteed",
            res.effective_rank,
            n - 1
        );
    }
    Ok(res)
}
