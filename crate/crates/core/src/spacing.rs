//! The spacing pivot `S = Φ̄(λ1)/Φ̄(λ2)` for known noise covariance.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::distfn::{self, LogProb};
use crate::error::{check_level, Result};
use crate::knots::{argmax_abs, knots, second_knot_with, KnotResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacingResult {
    pub p_value: f64,
    #[serde(skip)]
    pub log_p: LogProb,
    #[serde(flatten)]
    pub knots: KnotResult,
}

/// Log of the pivot from its knots; clamped to `≤ 0` against round-off when
/// `λ2` and `λ1` nearly coincide.
pub(crate) fn log_pivot(k: &KnotResult) -> f64 {
    assert!(
        k.lambda2 >= 0.0,
        "second knot must be non-negative, got {}",
        k.lambda2
    );
    let a = distfn::normal::log_sf(k.lambda1);
    let b = distfn::normal::log_sf(k.lambda2);
    (a - b).min(0.0)
}

pub fn spacing_pvalue(u: &DVector<f64>, r: &DMatrix<f64>) -> Result<SpacingResult> {
    let knots = knots(u, r)?;
    let log_p = LogProb::saturating(log_pivot(&knots));
    Ok(SpacingResult {
        p_value: log_p.prob(),
        log_p,
        knots,
    })
}

/// `S` for `U = XᵀY/σ` computed from the design, forming only the column
/// `R_{·î} = XᵀΣX_î` of the correlation matrix (`Σ = I`).
pub(crate) fn spacing_from_design(x: &DMatrix<f64>, u: &DVector<f64>) -> Result<SpacingResult> {
    let (i_hat, eps_hat) = argmax_abs(u)?;
    let r_col = x.tr_mul(&x.column(i_hat));
    let lambda2 = second_knot_with(u, i_hat, eps_hat, |j| r_col[j])?;
    let knots = KnotResult {
        lambda1: f64::from(eps_hat) * u[i_hat],
        lambda2,
        i_hat,
        eps_hat,
    };
    let log_p = LogProb::saturating(log_pivot(&knots));
    Ok(SpacingResult {
        p_value: log_p.prob(),
        log_p,
        knots,
    })
}

/// Rejection decision `S ≤ α` (boundary inclusive).
pub fn reject(s: f64, alpha: f64) -> Result<bool> {
    let alpha = check_level(alpha)?;
    Ok(s <= alpha)
}
