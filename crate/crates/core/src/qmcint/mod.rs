//! Randomized quasi-Monte-Carlo integration of Gaussian expectations.
//!
//! `E f(Y)` for `Y ~ N(mean, F·Fᵀ)` is estimated with `M` independent
//! Cranley–Patterson shifts of an `N`-point rank-1 lattice in `[0,1)^r`,
//! mapped to `N(0, I_r)` coordinatewise by `Φ⁻¹` after a tent (baker's)
//! transform, then to the target space by `F·z + mean`. The estimate is the
//! mean of the `M` shift averages and its standard error is their sample
//! standard deviation over `√M`.
//!
//! Shift `m` draws its randomness from the substream `m` of a ChaCha8 stream
//! keyed by the seed, so results do not depend on how shifts are scheduled.

mod lattice;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distfn::normal::ppf_fast;
use crate::error::{Error, Result};
use crate::linalg::{default_rel_tol, SortedEigen};
use crate::power::{Method, PowerEstimate};

/// Points mapped to targets per matrix product.
const BLOCK: usize = 256;
/// Lattice coordinates are kept in `[U_CLAMP, 1 − U_CLAMP]` before `Φ⁻¹`.
const U_CLAMP: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Lattice size `N`.
    pub lattice_points: usize,
    /// Number of random shifts `M`.
    pub shifts: usize,
    pub seed: u64,
    /// Replace the lattice by `N` i.i.d. Gaussian draws per shift.
    #[serde(default)]
    pub fallback_mc: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            lattice_points: 1 << 12,
            shifts: 25,
            seed: 0,
            fallback_mc: false,
        }
    }
}

impl IntegratorConfig {
    pub fn new(lattice_points: usize, shifts: usize, seed: u64) -> Result<Self> {
        let cfg = IntegratorConfig {
            lattice_points,
            shifts,
            seed,
            fallback_mc: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lattice_points < 16 {
            return Err(Error::Config(format!(
                "lattice size must be at least 16, got {}",
                self.lattice_points
            )));
        }
        if self.shifts < 8 {
            return Err(Error::Config(format!(
                "at least 8 random shifts are required, got {}",
                self.shifts
            )));
        }
        Ok(())
    }

    pub fn budget(&self) -> u64 {
        (self.lattice_points * self.shifts) as u64
    }
}

/// Latent representation `target = factor·z + mean`, `z ~ N(0, I_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFactor {
    pub mean: DVector<f64>,
    /// `p × r` matrix.
    pub factor: DMatrix<f64>,
}

impl GaussianFactor {
    pub fn new(mean: DVector<f64>, factor: DMatrix<f64>) -> Result<Self> {
        if factor.nrows() != mean.len() {
            return Err(Error::Shape {
                context: "gaussian factor",
                expected: format!("{} rows", mean.len()),
                found: format!("{}x{}", factor.nrows(), factor.ncols()),
            });
        }
        Ok(GaussianFactor { mean, factor })
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }

    pub fn with_mean(mut self, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(Error::Shape {
                context: "gaussian factor mean",
                expected: format!("length {}", self.dim()),
                found: format!("length {}", mean.len()),
            });
        }
        self.mean = mean;
        Ok(self)
    }

    /// Factor of `R = XᵀX` from the `n × n` eigenproblem of `XXᵀ`:
    /// with `XXᵀ = QΛQᵀ`, `F = XᵀQ` satisfies `FFᵀ = XᵀX`.
    pub fn from_design(x: &DMatrix<f64>, rel_tol: Option<f64>) -> Result<Self> {
        let eig = SortedEigen::new(&(x * x.transpose()))?;
        let r = eig.effective_rank(rel_tol.unwrap_or_else(|| default_rel_tol(x.nrows())));
        let factor = x.tr_mul(&eig.vectors.columns(0, r));
        Ok(GaussianFactor {
            mean: DVector::zeros(x.ncols()),
            factor,
        })
    }
}

/// Spectral factor of a PSD matrix; eigenvalues at or below
/// `rel_tol · λ_max` are dropped (`None`: `64·p·ε`). Columns are ordered by
/// decreasing eigenvalue so the leading lattice coordinates carry the most
/// variance.
pub fn factor_covariance(r: &DMatrix<f64>, rel_tol: Option<f64>) -> Result<GaussianFactor> {
    let eig = SortedEigen::new(r)?;
    let p = r.nrows();
    let rank = eig.effective_rank(rel_tol.unwrap_or_else(|| default_rel_tol(p)));
    let factor = DMatrix::from_fn(p, rank, |i, k| eig.vectors[(i, k)] * eig.values[k].sqrt());
    Ok(GaussianFactor {
        mean: DVector::zeros(p),
        factor,
    })
}

/// One draw from `N(mean, F·Fᵀ)`.
pub fn sample_gaussian<R: Rng + ?Sized>(gf: &GaussianFactor, rng: &mut R) -> DVector<f64> {
    let z = DVector::from_fn(gf.rank(), |_, _| rng.sample::<f64, _>(StandardNormal));
    &gf.factor * z + &gf.mean
}

pub(crate) fn shift_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Accumulates `f` over a block of latent columns.
fn eval_block<F>(f: &F, gf: &GaussianFactor, latent: &DMatrix<f64>) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut targets = &gf.factor * latent;
    for mut col in targets.column_iter_mut() {
        col += &gf.mean;
    }
    let mut sum = 0.0;
    for (k, col) in targets.column_iter().enumerate() {
        let v = f(col.as_slice());
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand {
                point: latent.column(k).iter().copied().collect(),
            });
        }
        sum += v;
    }
    Ok(sum)
}

fn lattice_shift_mean<F>(f: &F, gf: &GaussianFactor, z: &[u64], n: usize, shift: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let r = gf.rank();
    let mut sum = 0.0;
    let mut start = 0;
    while start < n {
        let len = BLOCK.min(n - start);
        let latent = DMatrix::from_fn(r, len, |j, c| {
            let k = (start + c) as u64;
            let x = ((k * z[j]) % n as u64) as f64 / n as f64 + shift[j];
            let x = x - x.floor();
            let t = 1.0 - (2.0 * x - 1.0).abs();
            ppf_fast(t.clamp(U_CLAMP, 1.0 - U_CLAMP))
        });
        sum += eval_block(f, gf, &latent)?;
        start += len;
    }
    Ok(sum / n as f64)
}

fn mc_shift_mean<F>(f: &F, gf: &GaussianFactor, n: usize, rng: &mut ChaCha8Rng) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let r = gf.rank();
    let mut sum = 0.0;
    let mut start = 0;
    while start < n {
        let len = BLOCK.min(n - start);
        let latent = DMatrix::from_fn(r, len, |_, _| rng.sample::<f64, _>(StandardNormal));
        sum += eval_block(f, gf, &latent)?;
        start += len;
    }
    Ok(sum / n as f64)
}

/// Randomized lattice estimate of `E f(Y)`, `Y ~ N(gf.mean, gf.factor·gf.factorᵀ)`.
///
/// `f` receives the target vector. Deterministic in `(cfg, f)` regardless of
/// the number of worker threads.
pub fn gaussian_expectation<F>(f: F, gf: &GaussianFactor, cfg: &IntegratorConfig) -> Result<PowerEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let n = cfg.lattice_points;
    let r = gf.rank();
    let z = if cfg.fallback_mc {
        Vec::new()
    } else {
        lattice::generating_vector(n as u64, r)
    };
    let means: Vec<f64> = (0..cfg.shifts)
        .into_par_iter()
        .map(|m| {
            let mut rng = shift_rng(cfg.seed, m as u64);
            if cfg.fallback_mc {
                mc_shift_mean(&f, gf, n, &mut rng)
            } else {
                let shift: Vec<f64> = (0..r).map(|_| rng.random::<f64>()).collect();
                lattice_shift_mean(&f, gf, &z, n, &shift)
            }
        })
        .collect::<Result<_>>()?;
    let m = means.len() as f64;
    let mean = means.iter().sum::<f64>() / m;
    let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(PowerEstimate {
        value: mean,
        stderr: (var / m).sqrt(),
        budget: cfg.budget(),
        method: if cfg.fallback_mc {
            Method::DirectMc
        } else {
            Method::Mcqmc
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal(p: usize) -> GaussianFactor {
        GaussianFactor::new(DVector::zeros(p), DMatrix::identity(p, p)).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(15, 8, 0).is_err());
        assert!(IntegratorConfig::new(16, 7, 0).is_err());
        assert!(IntegratorConfig::new(16, 8, 0).is_ok());
        let d = IntegratorConfig::default();
        assert_eq!((d.lattice_points, d.shifts), (4096, 25));
    }

    #[test]
    fn constant_integrand_is_exact() {
        let est = gaussian_expectation(|_| 1.0, &std_normal(3), &IntegratorConfig::default()).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.budget, 4096 * 25);
    }

    #[test]
    fn half_space_probabilities() {
        let cfg = IntegratorConfig::default();
        let gf = std_normal(2);
        let e = gaussian_expectation(|t| f64::from(u8::from(t[0] <= 0.0)), &gf, &cfg).unwrap();
        assert!((e.value - 0.5).abs() <= 3.0 * e.stderr.max(1e-12), "{e:?}");
        let e = gaussian_expectation(|t| f64::from(u8::from(t[0] <= 1.0)), &gf, &cfg).unwrap();
        assert!((e.value - 0.841_344_746_068_542_9).abs() <= 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn second_moments_through_a_factor() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]);
        let gf = factor_covariance(&r, None).unwrap();
        let e = gaussian_expectation(|t| t[0] * t[1], &gf, &IntegratorConfig::default()).unwrap();
        assert!((e.value - 0.6).abs() < 5.0 * e.stderr + 1e-3, "{e:?}");
    }

    #[test]
    fn non_finite_integrand_reports_point() {
        let err = gaussian_expectation(|_| f64::NAN, &std_normal(2), &IntegratorConfig::default())
            .unwrap_err();
        match err {
            Error::NonFiniteIntegrand { point } => assert_eq!(point.len(), 2),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn factor_examples() {
        let gf = factor_covariance(&DMatrix::identity(3, 3), None).unwrap();
        assert_eq!(gf.rank(), 3);
        assert!((gf.covariance() - DMatrix::<f64>::identity(3, 3)).norm() < 1e-14);

        let v = DVector::from_column_slice(&[1.0, -2.0, 0.5]);
        let gf = factor_covariance(&(&v * v.transpose()), None).unwrap();
        assert_eq!(gf.rank(), 1);
        let c = gf.factor.column(0);
        assert!((c.dot(&v).abs() - c.norm() * v.norm()).abs() < 1e-12);
    }

    #[test]
    fn design_factor_matches_gram() {
        let x = DMatrix::from_fn(3, 7, |i, j| ((i * 5 + j * 3) % 7) as f64 - 3.0 + 0.1 * j as f64);
        let gf = GaussianFactor::from_design(&x, None).unwrap();
        assert_eq!(gf.rank(), 3);
        let r = x.tr_mul(&x);
        assert!((gf.covariance() - &r).norm() <= 1e-8 * r.norm());
        let spectral = factor_covariance(&r, None).unwrap();
        assert_eq!(spectral.rank(), 3);
    }

    #[test]
    fn zero_factor_sample_is_mean() {
        let gf = GaussianFactor::new(DVector::from_column_slice(&[1.0, 2.0]), DMatrix::zeros(2, 0)).unwrap();
        let mut rng = shift_rng(1, 0);
        assert_eq!(sample_gaussian(&gf, &mut rng), gf.mean);
    }
}
