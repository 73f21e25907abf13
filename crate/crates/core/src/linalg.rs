use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue cut-off used when none is supplied: 64·dim·ε.
pub(crate) fn default_rel_tol(dim: usize) -> f64 {
    64.0 * dim.max(1) as f64 * f64::EPSILON
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn check_square(m: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape {
            context,
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenpairs of a symmetric matrix, sorted by decreasing eigenvalue.
pub(crate) struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        check_square(m, "symmetric eigendecomposition")?;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("symmetric eigendecomposition"));
        }
        let asym = max_asymmetry(m);
        if asym > 1e-8 {
            return Err(Error::Asymmetric(asym));
        }
        let eig = SymmetricEigen::new(symmetrize(m));
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = eig.eigenvectors.select_columns(&order);
        Ok(SortedEigen { values, vectors })
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Number of eigenvalues strictly above `rel_tol · max`.
    pub fn effective_rank(&self, rel_tol: f64) -> usize {
        let cut = rel_tol * self.max().max(0.0);
        self.values.iter().take_while(|&&v| v > cut && v > 0.0).count()
    }
}
