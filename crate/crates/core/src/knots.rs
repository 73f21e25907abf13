//! The first two knots of the LARS/lasso path.
//!
//! With `(î, ε̂)` the signed argmax of `|U|`, `λ1 = ε̂·U_î` and
//!
//! ```text
//! λ2 = max_{j≠î} max( (U_j − R_jî U_î) / (1 − ε̂R_jî), (−U_j + R_jî U_î) / (1 + ε̂R_jî) ).
//! ```

use nalgebra::{DMatrix, DVector};
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};

/// Denominators `|1 ∓ εR_ji|` at or below this are rejected.
pub const DENOMINATOR_TOL: f64 = 1e-8;

/// The knots `λ1 ≥ λ2 ≥ 0` and the selected pair `(î, ε̂)`.
///
/// `i_hat` is 0-based; it is serialised 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnotResult {
    pub lambda1: f64,
    pub lambda2: f64,
    pub i_hat: usize,
    pub eps_hat: i8,
}

impl Serialize for KnotResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("KnotResult", 4)?;
        st.serialize_field("lambda1", &self.lambda1)?;
        st.serialize_field("lambda2", &self.lambda2)?;
        st.serialize_field("i_hat", &(self.i_hat + 1))?;
        st.serialize_field("eps_hat", &self.eps_hat)?;
        st.end()
    }
}

/// Smallest index attaining `‖U‖∞` and the sign of that entry (+1 on zero).
pub fn argmax_abs(u: &DVector<f64>) -> Result<(usize, i8)> {
    if u.is_empty() {
        return Err(Error::Shape {
            context: "argmax_abs",
            expected: "non-empty vector".into(),
            found: "length 0".into(),
        });
    }
    let mut best = 0;
    let mut best_abs = f64::NEG_INFINITY;
    for (k, &v) in u.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite("correlation vector"));
        }
        if v.abs() > best_abs {
            best = k;
            best_abs = v.abs();
        }
    }
    let sign = if u[best] < 0.0 { -1 } else { 1 };
    Ok((best, sign))
}

/// `λ2^{i,ε}`: the second knot given the selected pair `(i, ε)`.
pub fn second_knot(u: &DVector<f64>, r: &DMatrix<f64>, i: usize, eps: i8) -> Result<f64> {
    let p = u.len();
    if r.shape() != (p, p) {
        return Err(Error::Shape {
            context: "second_knot",
            expected: format!("{p}x{p} correlation matrix"),
            found: format!("{}x{}", r.nrows(), r.ncols()),
        });
    }
    if i >= p {
        return Err(Error::Shape {
            context: "second_knot",
            expected: format!("index below {p}"),
            found: i.to_string(),
        });
    }
    second_knot_with(u, i, eps, |j| r[(j, i)])
}

/// `λ2^{i,ε}` with `R_ji` supplied by `r_col(j)`.
pub(crate) fn second_knot_with<F: Fn(usize) -> f64>(
    u: &DVector<f64>,
    i: usize,
    eps: i8,
    r_col: F,
) -> Result<f64> {
    let e = f64::from(eps);
    let ui = u[i];
    let mut lambda2 = f64::NEG_INFINITY;
    for j in (0..u.len()).filter(|&j| j != i) {
        let rji = r_col(j);
        let lo = 1.0 - e * rji;
        let hi = 1.0 + e * rji;
        if lo.abs() <= DENOMINATOR_TOL || hi.abs() <= DENOMINATOR_TOL {
            return Err(Error::NearUnitCorrelation(j));
        }
        let resid = u[j] - rji * ui;
        lambda2 = lambda2.max(resid / lo).max(-resid / hi);
    }
    Ok(lambda2)
}

pub fn knots(u: &DVector<f64>, r: &DMatrix<f64>) -> Result<KnotResult> {
    if u.len() < 2 {
        return Err(Error::Shape {
            context: "knots",
            expected: "at least 2 predictors".into(),
            found: format!("{}", u.len()),
        });
    }
    let (i_hat, eps_hat) = argmax_abs(u)?;
    let lambda1 = f64::from(eps_hat) * u[i_hat];
    let lambda2 = second_knot(u, r, i_hat, eps_hat)?;
    Ok(KnotResult {
        lambda1,
        lambda2,
        i_hat,
        eps_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn r2(rho: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_abs(&v(&[2.0, 1.0])).unwrap(), (0, 1));
        assert_eq!(argmax_abs(&v(&[-3.0, 1.0])).unwrap(), (0, -1));
        assert_eq!(argmax_abs(&v(&[1.0, -1.0])).unwrap(), (0, 1));
        assert_eq!(argmax_abs(&v(&[0.0, 0.0])).unwrap(), (0, 1));
        assert!(argmax_abs(&v(&[])).is_err());
    }

    #[test]
    fn second_knot_examples() {
        let l = second_knot(&v(&[2.0, 1.0]), &r2(0.0), 0, 1).unwrap();
        assert_eq!(l, 1.0);
        // U_2 - R_21 U_1 = -0.5, so max(-0.5/0.5, 0.5/1.5)
        let l = second_knot(&v(&[2.0, 0.5]), &r2(0.5), 0, 1).unwrap();
        assert!((l - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn near_unit_correlation_is_an_error() {
        let err = second_knot(&v(&[2.0, 1.0]), &r2(1.0 - 1e-9), 0, 1).unwrap_err();
        assert!(matches!(err, Error::NearUnitCorrelation(1)));
        let err = second_knot(&v(&[2.0, 1.0]), &r2(-1.0), 0, 1).unwrap_err();
        assert!(matches!(err, Error::NearUnitCorrelation(1)));
    }

    #[test]
    fn knots_compose() {
        let k = knots(&v(&[2.0, 1.0]), &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(
            k,
            KnotResult {
                lambda1: 2.0,
                lambda2: 1.0,
                i_hat: 0,
                eps_hat: 1
            }
        );
        let json = serde_json::to_string(&k).unwrap();
        assert_eq!(json, r#"{"lambda1":2.0,"lambda2":1.0,"i_hat":1,"eps_hat":1}"#);
    }

    #[test]
    fn orthogonal_second_knot_is_second_largest_abs() {
        let u = v(&[0.3, -2.5, 1.7, -1.9]);
        let k = knots(&u, &DMatrix::identity(4, 4)).unwrap();
        assert_eq!((k.lambda1, k.lambda2, k.i_hat, k.eps_hat), (2.5, 1.9, 1, -1));
    }
}
