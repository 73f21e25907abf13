//! Regression data model: design normalisation, correlations `U = XᵀY` and
//! the correlation matrix `R = XᵀΣX`.
//!
//! Columns are rescaled so that `X_iᵀΣX_i = 1` for every `i`. The rescaling
//! changes the coefficients but neither the null nor the alternative, so
//! [`DesignSpec::new`] applies it automatically and logs a warning.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{check_square, max_asymmetry, symmetrize, SortedEigen};

/// Columns with `X_iᵀΣX_i` at or below this are rejected.
pub const DEGENERATE_COLUMN_TOL: f64 = 1e-14;
/// `|R_ij|` at or above `1 − NEAR_DUPLICATE_TOL` flags duplicate or antipodal columns.
pub const NEAR_DUPLICATE_TOL: f64 = 1e-8;
/// Accepted deviation of the normalised diagonal from one.
pub const UNIT_DIAGONAL_TOL: f64 = 1e-8;
/// Smallest eigenvalue accepted for a positive-semidefinite `R`.
pub const PSD_TOL: f64 = 1e-8;

/// Noise model of `Y = Xβ + ξ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    /// `ξ ~ N(0, Σ)` with Σ known.
    KnownCovariance(DMatrix<f64>),
    /// `ξ ~ N(0, σ²·I)` with σ unknown; normalisation uses Σ = I.
    UnknownScale,
}

#[derive(Debug, Clone)]
pub struct DesignSpec {
    x: DMatrix<f64>,
    noise: Noise,
    beta_star: Option<DVector<f64>>,
    scales: Vec<f64>,
}

impl DesignSpec {
    /// Validates shapes and normalises the columns of `x`.
    ///
    /// `beta_star`, when present, is rescaled with the columns so that `Xβ*`
    /// is unchanged.
    pub fn new(x: DMatrix<f64>, noise: Noise, beta_star: Option<DVector<f64>>) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 1 || p < 2 {
            return Err(Error::Shape {
                context: "design matrix",
                expected: "n >= 1 rows and p >= 2 columns".into(),
                found: format!("{n}x{p}"),
            });
        }
        if let Noise::KnownCovariance(sigma) = &noise {
            if sigma.shape() != (n, n) {
                return Err(Error::Shape {
                    context: "noise covariance",
                    expected: format!("{n}x{n}"),
                    found: format!("{}x{}", sigma.nrows(), sigma.ncols()),
                });
            }
        }
        if let Some(b) = &beta_star {
            if b.len() != p {
                return Err(Error::Shape {
                    context: "coefficient vector",
                    expected: format!("length {p}"),
                    found: format!("length {}", b.len()),
                });
            }
        }
        let sq = column_quadratic_forms(&x, noise.covariance())?;
        let scales: Vec<f64> = sq.iter().map(|v| v.sqrt()).collect();
        let off: Vec<usize> = (0..p)
            .filter(|&i| (sq[i] - 1.0).abs() > UNIT_DIAGONAL_TOL)
            .collect();
        if !off.is_empty() {
            log::warn!(
                "{} column(s) violate X_i'ΣX_i = 1 (first: column {}); normalising",
                off.len(),
                off[0] + 1
            );
        }
        let x = normalize_design(&x, noise.covariance())?;
        let beta_star = beta_star.map(|b| {
            DVector::from_iterator(p, b.iter().zip(&scales).map(|(bi, s)| bi * s))
        });
        Ok(DesignSpec {
            x,
            noise,
            beta_star,
            scales,
        })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn noise(&self) -> &Noise {
        &self.noise
    }

    pub fn beta_star(&self) -> Option<&DVector<f64>> {
        self.beta_star.as_ref()
    }

    /// Original column scales `sqrt(X_iᵀΣX_i)` removed by normalisation.
    pub fn column_scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// `R = XᵀΣX` of the normalised design.
    pub fn gram(&self) -> DMatrix<f64> {
        match &self.noise {
            Noise::KnownCovariance(s) => gram(&self.x, Some(s)).expect("shapes checked"),
            Noise::UnknownScale => gram(&self.x, None).expect("shapes checked"),
        }
    }

    /// Builds the correlation model for an observation `y`.
    pub fn correlation_model(&self, y: &DVector<f64>) -> Result<CorrelationModel> {
        let u = correlate(&self.x, y)?;
        let mu_star = self.beta_star.as_ref().map(|b| {
            let xb = &self.x * b;
            self.x.transpose() * xb
        });
        CorrelationModel::new(u, self.gram(), mu_star)
    }
}

impl Noise {
    fn covariance(&self) -> Option<&DMatrix<f64>> {
        match self {
            Noise::KnownCovariance(s) => Some(s),
            Noise::UnknownScale => None,
        }
    }
}

fn column_quadratic_forms(x: &DMatrix<f64>, sigma: Option<&DMatrix<f64>>) -> Result<Vec<f64>> {
    let sq: Vec<f64> = match sigma {
        None => x.column_iter().map(|c| c.norm_squared()).collect(),
        Some(s) => {
            if s.shape() != (x.nrows(), x.nrows()) {
                return Err(Error::Shape {
                    context: "noise covariance",
                    expected: format!("{n}x{n}", n = x.nrows()),
                    found: format!("{}x{}", s.nrows(), s.ncols()),
                });
            }
            let sx = s * x;
            x.column_iter()
                .zip(sx.column_iter())
                .map(|(a, b)| a.dot(&b))
                .collect()
        }
    };
    if sq.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix"));
    }
    if let Some(i) = sq.iter().position(|&v| v <= DEGENERATE_COLUMN_TOL) {
        return Err(Error::DegenerateColumn(i));
    }
    Ok(sq)
}

/// Rescales each column so that `X_iᵀΣX_i = 1` (Σ = I when `sigma` is `None`).
pub fn normalize_design(x: &DMatrix<f64>, sigma: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    let sq = column_quadratic_forms(x, sigma)?;
    let mut out = x.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let s = sq[j].sqrt();
        if s != 1.0 {
            col /= s;
        }
    }
    Ok(out)
}

/// `U = XᵀY`.
pub fn correlate(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::Shape {
            context: "correlate",
            expected: format!("Y of length {}", x.nrows()),
            found: format!("length {}", y.len()),
        });
    }
    Ok(x.tr_mul(y))
}

/// `R = XᵀΣX`, symmetrised; Σ = I when `sigma` is `None`.
pub fn gram(x: &DMatrix<f64>, sigma: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    let r = match sigma {
        None => x.tr_mul(x),
        Some(s) => {
            if s.shape() != (x.nrows(), x.nrows()) {
                return Err(Error::Shape {
                    context: "gram",
                    expected: format!("{n}x{n} covariance", n = x.nrows()),
                    found: format!("{}x{}", s.nrows(), s.ncols()),
                });
            }
            x.tr_mul(&(s * x))
        }
    };
    Ok(symmetrize(&r))
}

/// The sufficient statistics of the test: `U ~ N_p(μ*, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationModel {
    pub u: DVector<f64>,
    pub r: DMatrix<f64>,
    pub mu_star: Option<DVector<f64>>,
}

impl CorrelationModel {
    pub fn new(u: DVector<f64>, r: DMatrix<f64>, mu_star: Option<DVector<f64>>) -> Result<Self> {
        check_square(&r, "correlation matrix")?;
        if r.nrows() != u.len() {
            return Err(Error::Shape {
                context: "correlation model",
                expected: format!("{p}x{p} matrix for U of length {p}", p = u.len()),
                found: format!("{}x{}", r.nrows(), r.ncols()),
            });
        }
        if let Some(m) = &mu_star {
            if m.len() != u.len() {
                return Err(Error::Shape {
                    context: "correlation model mean",
                    expected: format!("length {}", u.len()),
                    found: format!("length {}", m.len()),
                });
            }
        }
        Ok(CorrelationModel { u, r, mu_star })
    }

    pub fn p(&self) -> usize {
        self.u.len()
    }
}

/// A single assumption violation found by [`validate_assumptions`].
///
/// Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    NotNormalized(usize),
    NearDuplicate(usize, usize),
    NotPsd(f64),
    NonFinite,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NotNormalized(i) => write!(f, "R[{0},{0}] != 1", i + 1),
            Diagnostic::NearDuplicate(i, j) => {
                write!(f, "columns {} and {} are duplicate or antipodal", i + 1, j + 1)
            }
            Diagnostic::NotPsd(v) => write!(f, "R is not PSD (smallest eigenvalue {v:e})"),
            Diagnostic::NonFinite => write!(f, "non-finite entries"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsReport {
    pub flags: Vec<Diagnostic>,
}

impl DiagnosticsReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Report-only check of unit diagonal, distinct columns and positive
/// semidefiniteness of `R`.
pub fn validate_assumptions(model: &CorrelationModel) -> DiagnosticsReport {
    let r = &model.r;
    let p = r.nrows();
    let mut flags = Vec::new();
    if r.iter().chain(model.u.iter()).any(|v| !v.is_finite()) {
        flags.push(Diagnostic::NonFinite);
        return DiagnosticsReport { flags };
    }
    for i in 0..p {
        if (r[(i, i)] - 1.0).abs() > UNIT_DIAGONAL_TOL {
            flags.push(Diagnostic::NotNormalized(i));
        }
    }
    for j in 0..p {
        for i in 0..j {
            if r[(i, j)].abs() >= 1.0 - NEAR_DUPLICATE_TOL {
                flags.push(Diagnostic::NearDuplicate(i, j));
            }
        }
    }
    if max_asymmetry(r) <= 1e-8 {
        if let Ok(eig) = SortedEigen::new(r) {
            if eig.min() < -PSD_TOL {
                flags.push(Diagnostic::NotPsd(eig.min()));
            }
        }
    }
    DiagnosticsReport { flags }
}

/// Reads a numeric CSV matrix: comma separated, row-major, with an optional
/// single header row (detected as a first row with a non-numeric field).
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix_csv(&text, path)
}

pub(crate) fn parse_matrix_csv(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (k, rec) in reader.records().enumerate() {
        let line = |rec: &csv::StringRecord| rec.position().map(|p| p.line()).unwrap_or(k as u64 + 1);
        let rec = rec.map_err(|e| {
            let l = e.position().map(|p| p.line()).unwrap_or(k as u64 + 1);
            parse_err(l, e.to_string())
        })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> = rec
            .iter()
            .enumerate()
            .map(|(c, f)| f.parse::<f64>().map_err(|_| c))
            .collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if rows.is_empty() && width.is_none() && k == 0 => {
                // header row
                width = Some(rec.len());
                continue;
            }
            Err(c) => {
                return Err(parse_err(
                    line(&rec),
                    format!("field {} (`{}`) is not a number", c + 1, &rec[c]),
                ))
            }
        };
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(parse_err(line(&rec), format!("non-finite value {v}")));
        }
        match width {
            Some(w) if w != values.len() => {
                return Err(parse_err(
                    line(&rec),
                    format!("expected {w} fields, found {}", values.len()),
                ))
            }
            _ => width = Some(values.len()),
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no numeric rows".into()));
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Reads a vector stored as a single-column CSV (a single row is accepted too).
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix_csv(path)?;
    vector_from_matrix(m, path)
}

fn vector_from_matrix(m: DMatrix<f64>, path: &Path) -> Result<DVector<f64>> {
    match m.shape() {
        (_, 1) => Ok(m.column(0).into_owned()),
        (1, _) => Ok(m.row(0).transpose()),
        (r, c) => Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected a single-column vector, found {r}x{c}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("mem.csv")
    }

    #[test]
    fn normalize_scales_columns() {
        let x = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let out = normalize_design(&x, None).unwrap();
        assert_eq!(out.column(0).as_slice(), &[1.0, 0.0]);
        assert_eq!(out.column(1).as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn normalize_with_known_covariance() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let out = normalize_design(&x, Some(&sigma)).unwrap();
        let r = gram(&out, Some(&sigma)).unwrap();
        for i in 0..2 {
            assert!((r[(i, i)] - 1.0).abs() < 1e-14);
        }
        // direction preserved
        for j in 0..2 {
            let c = out.column(j).dot(&x.column(j)) / (out.column(j).norm() * x.column(j).norm());
            assert!((c - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let x = DMatrix::from_fn(6, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.7);
        let once = normalize_design(&x, None).unwrap();
        let twice = normalize_design(&once, None).unwrap();
        assert!((once - twice).abs().max() <= 1e-15);
    }

    #[test]
    fn zero_column_is_degenerate() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            normalize_design(&x, None),
            Err(Error::DegenerateColumn(1))
        ));
    }

    #[test]
    fn correlate_and_gram_identity() {
        let x = DMatrix::<f64>::identity(2, 2);
        let y = DVector::from_vec(vec![3.0, -1.0]);
        assert_eq!(correlate(&x, &y).unwrap().as_slice(), &[3.0, -1.0]);
        assert_eq!(gram(&x, Some(&DMatrix::identity(2, 2))).unwrap(), DMatrix::identity(2, 2));
        assert!(correlate(&x, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn gram_matches_triple_loop() {
        let x = DMatrix::from_row_slice(
            4,
            3,
            &[0.3, -1.2, 0.8, 1.1, 0.4, -0.5, -0.7, 0.9, 0.2, 0.05, -0.3, 1.4],
        );
        let r = gram(&x, None).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += x[(k, a)] * x[(k, b)];
                }
                assert!((r[(a, b)] - s).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn design_spec_rescales_beta() {
        let x = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let beta = DVector::from_vec(vec![1.0, 1.0]);
        let d = DesignSpec::new(x.clone(), Noise::UnknownScale, Some(beta.clone())).unwrap();
        let before = &x * &beta;
        let after = d.x() * d.beta_star().unwrap();
        assert!((before - after).norm() < 1e-14);
        let r = d.gram();
        assert!((r[(0, 0)] - 1.0).abs() < 1e-12 && (r[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_flags() {
        let clean = CorrelationModel::new(DVector::zeros(3), DMatrix::identity(3, 3), None).unwrap();
        assert!(validate_assumptions(&clean).is_clean());

        let x = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let r = gram(&normalize_design(&x, None).unwrap(), None).unwrap();
        let dup = CorrelationModel::new(DVector::zeros(3), r, None).unwrap();
        assert!(validate_assumptions(&dup)
            .flags
            .contains(&Diagnostic::NearDuplicate(0, 1)));

        let mut r = DMatrix::identity(2, 2);
        r[(0, 0)] = 1.5;
        let bad = CorrelationModel::new(DVector::zeros(2), r, None).unwrap();
        assert_eq!(validate_assumptions(&bad).flags, vec![Diagnostic::NotNormalized(0)]);

        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, -1.0]);
        let m = CorrelationModel::new(DVector::zeros(2), r, None).unwrap();
        assert!(validate_assumptions(&m)
            .flags
            .iter()
            .any(|f| matches!(f, Diagnostic::NotPsd(_))));
    }

    #[test]
    fn csv_with_header_and_vector() {
        let m = parse_matrix_csv("a,b\n1,2\n3.5,-4e-1\n", &p()).unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(m[(1, 1)], -0.4);
        let v = vector_from_matrix(parse_matrix_csv("1\n2\n3\n", &p()).unwrap(), &p()).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let err = parse_matrix_csv("1,2\n3,x\n", &p()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
        let err = parse_matrix_csv("1,2\n3,4\n5\n", &p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(parse_matrix_csv("", &p()).is_err());
    }
}
