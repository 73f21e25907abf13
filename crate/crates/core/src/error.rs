use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the spacing library.
///
/// Indices carried by variants are 0-based; `Display` renders them 1-based
/// to match the usual `1..=p` column labelling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("column {} is degenerate (X_i' Sigma X_i <= 1e-14)", .0 + 1)]
    DegenerateColumn(usize),

    #[error("column {} is not normalised (norm^2 = {norm_sq})", .index + 1)]
    NotNormalized { index: usize, norm_sq: f64 },

    #[error("near unit correlation between the selected column and column {}", .0 + 1)]
    NearUnitCorrelation(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("variance estimate is degenerate ({0:e}); Y lies in the span of the selected column")]
    DegenerateScale(f64),

    #[error("integrand returned a non-finite value at latent point {point:?}")]
    NonFiniteIntegrand { point: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}:{line}: {msg}", .path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by a numerically degenerate design or sample
    /// rather than malformed input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateColumn(_)
                | Error::NearUnitCorrelation(_)
                | Error::DegenerateScale(_)
                | Error::NonFiniteIntegrand { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(x: f64, what: &'static str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn check_level(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(Error::Domain {
            what: "significance level",
            value: alpha,
        })
    }
}
