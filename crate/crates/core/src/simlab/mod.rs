//! Simulation studies: scenario generators, p-value calibration, power
//! comparisons against Pearson's χ² test, and figure reproduction.
//!
//! Every replicate draws from its own substream (`set_stream(replicate)`) of
//! a ChaCha8 generator keyed by the scenario seed, so study output does not
//! depend on the number of worker threads.

mod figures;
mod studies;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_level, Error, Result};
use crate::qmcint::IntegratorConfig;

pub use figures::{reproduce_figure, FigureId, Manifest};
pub use studies::{
    compare_tests, pvalue_study, write_csv, CompareRecord, CompareStudy, PvalueRecord,
    PvalueStudy, StudyResult, Which,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignLaw {
    /// i.i.d. `N(0,1)` entries, columns rescaled to unit norm.
    #[default]
    GaussianIid,
}

/// Law of the nonzero coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanRegime {
    /// `N(0, 1)`: the small mean of the p-value study.
    SmallGauss,
    /// `Uniform[0, 1]`: the small mean of the comparison study.
    SmallUnif,
    /// `N(0, 4)`: the medium mean of the p-value study.
    #[serde(rename = "medium_gauss4")]
    MediumGauss4,
    /// `N(0, 1)`: the medium mean of the comparison study.
    #[serde(rename = "medium_var1")]
    MediumVar1,
    /// `N(0, 2)`: the large mean of the comparison study.
    Large,
    /// `N(√(2 log p), 1)`.
    #[serde(rename = "sqrt2logp")]
    Sqrt2LogP,
    /// Per replicate, one of small_gauss, medium_gauss4 or sqrt2logp.
    PvalueMixture,
    /// Per replicate, one of small_unif, medium_var1 or large.
    CompareMixture,
    /// First coefficient sqrt2logp, the others `N(0, 1)`.
    DominantPlusGauss,
}

impl MeanRegime {
    pub fn name(self) -> &'static str {
        match self {
            MeanRegime::SmallGauss => "small_gauss",
            MeanRegime::SmallUnif => "small_unif",
            MeanRegime::MediumGauss4 => "medium_gauss4",
            MeanRegime::MediumVar1 => "medium_var1",
            MeanRegime::Large => "large",
            MeanRegime::Sqrt2LogP => "sqrt2logp",
            MeanRegime::PvalueMixture => "pvalue_mixture",
            MeanRegime::CompareMixture => "compare_mixture",
            MeanRegime::DominantPlusGauss => "dominant_plus_gauss",
        }
    }

    /// Human-readable law of the nonzero entries.
    pub fn law(self) -> &'static str {
        match self {
            MeanRegime::SmallGauss | MeanRegime::MediumVar1 => "N(0,1)",
            MeanRegime::SmallUnif => "Uniform[0,1]",
            MeanRegime::MediumGauss4 => "N(0,4)",
            MeanRegime::Large => "N(0,2)",
            MeanRegime::Sqrt2LogP => "N(sqrt(2 log p),1)",
            MeanRegime::PvalueMixture => "per replicate one of N(0,1), N(0,4), N(sqrt(2 log p),1)",
            MeanRegime::CompareMixture => "per replicate one of Uniform[0,1], N(0,1), N(0,2)",
            MeanRegime::DominantPlusGauss => "first N(sqrt(2 log p),1), others N(0,1)",
        }
    }
}

impl fmt::Display for MeanRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_sigma() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    0.05
}

/// A simulation setting: `Y = Xβ + σξ` with `X` drawn from `design_law` and
/// `s` nonzero coefficients drawn from `mean_regime`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub s: usize,
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub design_law: DesignLaw,
    pub mean_regime: MeanRegime,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Lattice settings for power comparisons; the seed field is ignored
    /// (each replicate derives its own).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorConfig>,
}

/// Lattice settings used by [`compare_tests`] when a scenario sets none:
/// each replicate needs only a ranking of two powers, not a tight estimate.
pub const COMPARE_INTEGRATOR: IntegratorConfig = IntegratorConfig {
    lattice_points: 4096,
    shifts: 8,
    seed: 0,
    fallback_mc: false,
};

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.s > self.p {
            return Err(Error::Config(format!(
                "sparsity s = {} exceeds p = {}",
                self.s, self.p
            )));
        }
        if self.n < 1 || self.p < 2 {
            return Err(Error::Config(format!(
                "need n >= 1 and p >= 2, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        check_level(self.alpha)?;
        if self.replicates < 1 {
            return Err(Error::Config("at least one replicate is required".into()));
        }
        if let Some(cfg) = &self.integrator {
            cfg.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }
}

/// `n × p` design with i.i.d. standard normal entries and unit-norm columns.
pub fn gen_design<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
    let mut x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut col in x.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    x
}

fn draw_entry<R: Rng + ?Sized>(regime: MeanRegime, p: usize, rng: &mut R) -> f64 {
    let normal = |mean: f64, sd: f64, rng: &mut R| Normal::new(mean, sd).expect("finite sd").sample(rng);
    match regime {
        MeanRegime::SmallGauss | MeanRegime::MediumVar1 => rng.sample(StandardNormal),
        MeanRegime::SmallUnif => rng.random::<f64>(),
        MeanRegime::MediumGauss4 => normal(0.0, 2.0, rng),
        MeanRegime::Large => normal(0.0, std::f64::consts::SQRT_2, rng),
        MeanRegime::Sqrt2LogP => normal((2.0 * (p as f64).ln()).sqrt(), 1.0, rng),
        MeanRegime::PvalueMixture | MeanRegime::CompareMixture | MeanRegime::DominantPlusGauss => {
            unreachable!("composite regimes are resolved by gen_beta")
        }
    }
}

/// `p`-vector with `s` nonzero entries at uniformly chosen positions.
pub fn gen_beta<R: Rng + ?Sized>(s: usize, p: usize, regime: MeanRegime, rng: &mut R) -> DVector<f64> {
    let mut beta = DVector::zeros(p);
    if s == 0 {
        return beta;
    }
    let positions = sample(rng, p, s.min(p)).into_vec();
    let pick = |choices: [MeanRegime; 3], rng: &mut R| choices[rng.random_range(0..3)];
    let base = match regime {
        MeanRegime::PvalueMixture => pick(
            [MeanRegime::SmallGauss, MeanRegime::MediumGauss4, MeanRegime::Sqrt2LogP],
            rng,
        ),
        MeanRegime::CompareMixture => pick(
            [MeanRegime::SmallUnif, MeanRegime::MediumVar1, MeanRegime::Large],
            rng,
        ),
        other => other,
    };
    for (k, &pos) in positions.iter().enumerate() {
        beta[pos] = match base {
            MeanRegime::DominantPlusGauss if k == 0 => draw_entry(MeanRegime::Sqrt2LogP, p, rng),
            MeanRegime::DominantPlusGauss => draw_entry(MeanRegime::SmallGauss, p, rng),
            r => draw_entry(r, p, rng),
        };
    }
    beta
}

/// Kolmogorov–Smirnov distance to `Uniform[0,1]` with the asymptotic 1%
/// decision `D > 1.63/√N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub distance: f64,
    pub critical: f64,
    pub reject: bool,
}

pub fn ks_uniform(sample: &[f64]) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(Error::Config("empty sample".into()));
    }
    if let Some(&bad) = sample.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain {
            what: "p-value (need 0 <= p <= 1)",
            value: bad,
        });
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let distance = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    let critical = 1.63 / n.sqrt();
    Ok(KsResult {
        distance,
        critical,
        reject: distance > critical,
    })
}
