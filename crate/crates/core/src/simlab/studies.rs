use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{gen_beta, gen_design, ks_uniform, KsResult, Scenario, COMPARE_INTEGRATOR};
use crate::error::{Error, Result};
use crate::power::{chisq_power, spacing_power_factor};
use crate::qmcint::{shift_rng, GaussianFactor, IntegratorConfig};
use crate::spacing::spacing_from_design;
use crate::tspacing::t_spacing_quiet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    S,
    T,
    Both,
}

impl Which {
    fn wants_s(self) -> bool {
        matches!(self, Which::S | Which::Both)
    }

    fn wants_t(self) -> bool {
        matches!(self, Which::T | Which::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PvalueRecord {
    pub replicate: usize,
    pub s: Option<f64>,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PvalueStudy {
    pub scenario: Scenario,
    #[serde(skip)]
    pub records: Vec<PvalueRecord>,
    pub ks_s: Option<KsResult>,
    pub ks_t: Option<KsResult>,
    /// Fraction of replicates with p-value at most α.
    pub reject_rate_s: Option<f64>,
    pub reject_rate_t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareRecord {
    pub replicate: usize,
    pub spacing: f64,
    pub spacing_stderr: f64,
    pub chisq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareStudy {
    pub scenario: Scenario,
    #[serde(skip)]
    pub records: Vec<CompareRecord>,
    pub integrator: IntegratorConfig,
    /// Fraction of replicates where the χ² power exceeds the spacing power.
    pub frac_chisq_more_powerful: f64,
    pub frac_spacing_more_powerful: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum StudyResult {
    Pvalue(PvalueStudy),
    Compare(CompareStudy),
}

impl StudyResult {
    /// Writes the per-replicate records as CSV.
    pub fn write_records<W: Write>(&self, out: W) -> Result<()> {
        match self {
            StudyResult::Pvalue(s) => write_records(out, &s.records),
            StudyResult::Compare(c) => write_records(out, &c.records),
        }
    }
}

fn write_records<W: Write, T: Serialize>(out: W, records: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<output>".into(),
        source: e,
    })
}

fn csv_error(e: csv::Error) -> Error {
    Error::Config(format!("csv output: {e}"))
}

/// Writes serialisable rows to a CSV file.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_records(std::io::BufWriter::new(file), rows).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        e => e,
    })
}

fn replicate_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    shift_rng(seed, rep as u64)
}

fn rate(values: &[f64], alpha: f64) -> f64 {
    values.iter().filter(|&&v| v <= alpha).count() as f64 / values.len() as f64
}

/// Per replicate: a fresh design, coefficients and noise; records S (with
/// `U = XᵀY/σ`, σ known) and/or T (σ unknown).
pub fn pvalue_study(sc: &Scenario, which: Which) -> Result<PvalueStudy> {
    sc.validate()?;
    let records: Vec<PvalueRecord> = (0..sc.replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(sc.seed, rep);
            let x = gen_design(sc.n, sc.p, &mut rng);
            let beta = gen_beta(sc.s, sc.p, sc.mean_regime, &mut rng);
            let noise = DVector::from_fn(sc.n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let y = &x * &beta + noise * sc.sigma;
            let s = if which.wants_s() {
                let u = x.tr_mul(&y) / sc.sigma;
                Some(spacing_from_design(&x, &u)?.p_value)
            } else {
                None
            };
            let t = if which.wants_t() {
                Some(t_spacing_quiet(&x, &y)?.p_value)
            } else {
                None
            };
            Ok(PvalueRecord { replicate: rep, s, t })
        })
        .collect::<Result<_>>()?;
    let s: Vec<f64> = records.iter().filter_map(|r| r.s).collect();
    let t: Vec<f64> = records.iter().filter_map(|r| r.t).collect();
    let ks = |v: &[f64]| if v.is_empty() { Ok(None) } else { ks_uniform(v).map(Some) };
    Ok(PvalueStudy {
        scenario: sc.clone(),
        ks_s: ks(&s)?,
        ks_t: ks(&t)?,
        reject_rate_s: (!s.is_empty()).then(|| rate(&s, sc.alpha)),
        reject_rate_t: (!t.is_empty()).then(|| rate(&t, sc.alpha)),
        records,
    })
}

/// Per replicate: draws `(X, β)` and compares the exact spacing power
/// (`U ~ N(XᵀXβ/σ, XᵀX)`) with the power of Pearson's test
/// (`‖Y/σ‖² ~ χ²(n, ‖Xβ‖²/σ²)`) at level α.
pub fn compare_tests(sc: &Scenario) -> Result<CompareStudy> {
    sc.validate()?;
    let base = sc.integrator.unwrap_or(COMPARE_INTEGRATOR);
    let n_dof = u32::try_from(sc.n).map_err(|_| Error::Config("n too large".into()))?;
    let records: Vec<CompareRecord> = (0..sc.replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(sc.seed, rep);
            let x = gen_design(sc.n, sc.p, &mut rng);
            let beta = gen_beta(sc.s, sc.p, sc.mean_regime, &mut rng);
            let cfg = IntegratorConfig {
                seed: rng.random(),
                ..base
            };
            let xb = &x * &beta;
            let mu = x.tr_mul(&xb) / sc.sigma;
            let gf = GaussianFactor::from_design(&x, None)?.with_mean(mu)?;
            let spacing = spacing_power_factor(&gf, sc.alpha, &cfg)?;
            let ncp = xb.norm_squared() / (sc.sigma * sc.sigma);
            let chisq = chisq_power(ncp, n_dof, sc.alpha)?;
            Ok(CompareRecord {
                replicate: rep,
                spacing: spacing.value,
                spacing_stderr: spacing.stderr,
                chisq: chisq.value,
            })
        })
        .collect::<Result<_>>()?;
    let reps = records.len() as f64;
    let chisq_wins = records.iter().filter(|r| r.chisq > r.spacing).count() as f64;
    let spacing_wins = records.iter().filter(|r| r.spacing > r.chisq).count() as f64;
    Ok(CompareStudy {
        scenario: sc.clone(),
        integrator: base,
        frac_chisq_more_powerful: chisq_wins / reps,
        frac_spacing_more_powerful: spacing_wins / reps,
        records,
    })
}
