//! Scalar distribution functions: standard normal, Student-t and
//! (noncentral) chi-squared.
//!
//! Every survival function has a log-domain companion. Pivots are ratios of
//! tail probabilities that underflow long before their logarithms do, so the
//! rest of the crate works almost exclusively with [`LogProb`].

pub(crate) mod chisq;
pub(crate) mod normal;
pub(crate) mod special;
pub(crate) mod student;

use serde::Serialize;

use crate::error::{check_finite, Error, Result};

/// Natural logarithm of a probability in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct LogProb(f64);

impl LogProb {
    pub fn new(value: f64) -> Result<Self> {
        if value <= 0.0 && value > f64::NEG_INFINITY {
            Ok(LogProb(value))
        } else {
            Err(Error::Domain {
                what: "log-probability",
                value,
            })
        }
    }

    /// Clamps rounding excursions above zero.
    pub(crate) fn saturating(value: f64) -> Self {
        LogProb(value.min(0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }
}

/// Standard normal density φ(x).
pub fn norm_pdf(x: f64) -> Result<f64> {
    check_finite(x, "norm_pdf")?;
    Ok(normal::pdf(x))
}

/// Standard normal survival function Φ̄(x) = 1 − Φ(x).
pub fn norm_sf(x: f64) -> Result<f64> {
    check_finite(x, "norm_sf")?;
    Ok(normal::sf(x))
}

/// log Φ̄(x); finite for every finite x.
pub fn norm_logsf(x: f64) -> Result<LogProb> {
    check_finite(x, "norm_logsf")?;
    Ok(LogProb::saturating(normal::log_sf(x)))
}

/// Inverse of Φ̄.
pub fn norm_isf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            what: "probability",
            value: p,
        });
    }
    Ok(normal::isf(p))
}

/// Inverse of Φ̄ taking log p; stable far into the upper tail.
pub fn norm_isf_log(log_p: f64) -> Result<f64> {
    if !(log_p < 0.0 && log_p > f64::NEG_INFINITY) {
        return Err(Error::Domain {
            what: "log-probability",
            value: log_p,
        });
    }
    Ok(normal::isf_log(log_p))
}

fn check_dof(nu: u32) -> Result<f64> {
    if nu < 1 {
        return Err(Error::Domain {
            what: "degrees of freedom",
            value: nu as f64,
        });
    }
    Ok(nu as f64)
}

/// Student-t survival function 1 − F_ν(t).
pub fn student_sf(t: f64, nu: u32) -> Result<f64> {
    let nu = check_dof(nu)?;
    if t.is_nan() {
        return Err(Error::NonFinite("student_sf"));
    }
    Ok(student::sf(t, nu))
}

/// log(1 − F_ν(t)).
pub fn student_logsf(t: f64, nu: u32) -> Result<LogProb> {
    let nu = check_dof(nu)?;
    check_finite(t, "student_logsf")?;
    Ok(LogProb::saturating(student::log_sf(t, nu)))
}

/// Survival function of χ²(k, ncp); ncp = 0 gives the central law.
pub fn chisq_sf(x: f64, k: u32, ncp: f64) -> Result<f64> {
    let k = check_dof(k)?;
    check_finite(x, "chisq_sf")?;
    check_finite(ncp, "chisq_sf")?;
    if x < 0.0 {
        return Err(Error::Domain {
            what: "chi-squared argument",
            value: x,
        });
    }
    if ncp < 0.0 {
        return Err(Error::Domain {
            what: "noncentrality",
            value: ncp,
        });
    }
    Ok(chisq::sf(x, k, ncp))
}

/// Lower-tail quantile of the central χ²(k) law: F⁻¹(q).
pub fn chisq_quantile(q: f64, k: u32) -> Result<f64> {
    let k = check_dof(k)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain {
            what: "probability",
            value: q,
        });
    }
    Ok(chisq::central_isf(1.0 - q, k))
}

/// Upper-tail quantile of the central χ²(k) law: Q⁻¹(p).
///
/// Preferred over `chisq_quantile(1 - p, k)` for small `p`, which loses the
/// low bits of `p` in the subtraction.
pub fn chisq_isf(p: f64, k: u32) -> Result<f64> {
    let k = check_dof(k)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            what: "probability",
            value: p,
        });
    }
    Ok(chisq::central_isf(p, k))
}
