use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::studies::{compare_tests, pvalue_study, write_csv, Which};
use super::{MeanRegime, Scenario, COMPARE_INTEGRATOR};
use crate::error::{Error, Result};
use crate::power::{chisq_power, power_2d};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    Fig1,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl FigureId {
    pub const ALL: [FigureId; 6] = [
        FigureId::Fig1,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig7,
        FigureId::Fig8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8 => "fig8",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Budget {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifts: Option<usize>,
}

/// Contents of `manifest.json`, keyed by output file name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub figure: FigureId,
    pub seed: u64,
    pub scale: f64,
    pub git_describe: String,
    pub budgets: BTreeMap<String, Budget>,
    pub regimes: BTreeMap<String, String>,
}

const PVALUE_REPLICATES: usize = 5000;
const COMPARE_REPLICATES: usize = 2000;
const GRID_AXIS: usize = 81;
const GRID_HALF_WIDTH: f64 = 4.0;
const RHOS: [f64; 3] = [0.0, 0.5, -0.4];
const LEVEL: f64 = 0.05;

fn scaled(base: usize, scale: f64) -> usize {
    ((base as f64 * scale).round() as usize).max(1)
}

struct Writer<'a> {
    dir: &'a Path,
    manifest: Manifest,
}

impl Writer<'_> {
    fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn record(&mut self, file: &str, budget: Budget, regime: Option<MeanRegime>) {
        self.manifest.budgets.insert(file.to_string(), budget);
        if let Some(r) = regime {
            self.manifest
                .regimes
                .insert(file.to_string(), format!("{}: {}", r.name(), r.law()));
        }
    }
}

#[derive(Serialize)]
struct PvalueRow {
    replicate: usize,
    p_value: f64,
}

#[derive(Serialize)]
struct GridRow {
    beta1: f64,
    beta2: f64,
    power: f64,
}

#[derive(Serialize)]
struct GridPairRow {
    beta1: f64,
    beta2: f64,
    spacing: f64,
    chisq: f64,
}

fn pvalue_scenario(s: usize, n: usize, p: usize, regime: MeanRegime, reps: usize, seed: u64) -> Scenario {
    Scenario {
        s,
        n,
        p,
        design_law: Default::default(),
        mean_regime: regime,
        sigma: 1.0,
        alpha: LEVEL,
        replicates: reps,
        seed,
        integrator: None,
    }
}

fn fig1(w: &mut Writer, seed: u64, scale: f64) -> Result<()> {
    let reps = scaled(PVALUE_REPLICATES, scale);
    let regime = MeanRegime::PvalueMixture;
    for (k, (n, p)) in [(50, 100), (100, 200), (100, 500)].into_iter().enumerate() {
        let null_seed = seed + 2 * k as u64;
        let alt_seed = null_seed + 1;
        let null = pvalue_study(&pvalue_scenario(0, n, p, regime, reps, null_seed), Which::S)?;
        let alt = pvalue_study(&pvalue_scenario(2, n, p, regime, reps, alt_seed), Which::Both)?;
        let curves = [
            ("null_S", &null, 's', null_seed, None),
            ("alt_S", &alt, 's', alt_seed, Some(regime)),
            ("alt_T", &alt, 't', alt_seed, Some(regime)),
        ];
        for (label, study, which, panel_seed, reg) in curves {
            let file = format!("fig1_n{n}_p{p}_{label}.csv");
            let rows: Vec<PvalueRow> = study
                .records
                .iter()
                .map(|r| PvalueRow {
                    replicate: r.replicate,
                    p_value: if which == 's' { r.s } else { r.t }.expect("requested pivot"),
                })
                .collect();
            write_csv(&w.path(&file), &rows)?;
            w.record(
                &file,
                Budget {
                    seed: panel_seed,
                    replicates: Some(reps),
                    ..Default::default()
                },
                reg,
            );
        }
    }
    Ok(())
}

fn grid(scale: f64) -> Vec<f64> {
    let m = scaled(GRID_AXIS, scale).clamp(9, GRID_AXIS);
    (0..m)
        .map(|k| -GRID_HALF_WIDTH + 2.0 * GRID_HALF_WIDTH * k as f64 / (m - 1) as f64)
        .collect()
}

fn rho_label(rho: f64) -> String {
    format!("rho_{rho}")
}

fn fig4(w: &mut Writer, seed: u64, scale: f64) -> Result<()> {
    let axis = grid(scale);
    for rho in RHOS {
        let mut rows = Vec::with_capacity(axis.len() * axis.len());
        for &b1 in &axis {
            for &b2 in &axis {
                rows.push(GridRow {
                    beta1: b1,
                    beta2: b2,
                    power: power_2d([b1, b2], rho, LEVEL)?.value,
                });
            }
        }
        let file = format!("fig4_{}.csv", rho_label(rho));
        write_csv(&w.path(&file), &rows)?;
        w.record(
            &file,
            Budget {
                seed,
                grid_points: Some(rows.len()),
                ..Default::default()
            },
            None,
        );
    }
    Ok(())
}

/// Spacing versus Pearson's test for `n = p = 2`: with `XᵀX = R(ρ)` the χ²
/// statistic has noncentrality `βᵀR(ρ)β`.
fn fig5(w: &mut Writer, seed: u64, scale: f64) -> Result<()> {
    let axis = grid(scale);
    for rho in RHOS {
        let mut rows = Vec::with_capacity(axis.len() * axis.len());
        for &b1 in &axis {
            for &b2 in &axis {
                let ncp = b1 * b1 + 2.0 * rho * b1 * b2 + b2 * b2;
                rows.push(GridPairRow {
                    beta1: b1,
                    beta2: b2,
                    spacing: power_2d([b1, b2], rho, LEVEL)?.value,
                    chisq: chisq_power(ncp, 2, LEVEL)?.value,
                });
            }
        }
        let file = format!("fig5_{}.csv", rho_label(rho));
        write_csv(&w.path(&file), &rows)?;
        w.record(
            &file,
            Budget {
                seed,
                grid_points: Some(rows.len()),
                ..Default::default()
            },
            None,
        );
    }
    Ok(())
}

fn compare_panels(
    w: &mut Writer,
    fig: &str,
    panels: &[((usize, usize, usize), MeanRegime)],
    seed: u64,
    scale: f64,
) -> Result<()> {
    let reps = scaled(COMPARE_REPLICATES, scale);
    for (k, &((s, n, p), regime)) in panels.iter().enumerate() {
        let panel_seed = seed + k as u64;
        let sc = pvalue_scenario(s, n, p, regime, reps, panel_seed);
        let study = compare_tests(&sc)?;
        let file = format!("{fig}_{}_s{s}_n{n}_p{p}.csv", regime.name());
        write_csv(&w.path(&file), &study.records)?;
        w.record(
            &file,
            Budget {
                seed: panel_seed,
                replicates: Some(reps),
                lattice_points: Some(COMPARE_INTEGRATOR.lattice_points),
                shifts: Some(COMPARE_INTEGRATOR.shifts),
                ..Default::default()
            },
            Some(regime),
        );
    }
    Ok(())
}

/// Writes the CSV panels of a figure and `manifest.json` into `outdir`.
///
/// Replicate counts and grid sizes are multiplied by `scale` (at least 1
/// replicate, 9 grid points per axis). `build_id` is recorded verbatim.
pub fn reproduce_figure(
    id: FigureId,
    outdir: &Path,
    scale: f64,
    seed: u64,
    build_id: &str,
) -> Result<Manifest> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Config(format!("scale must be positive, got {scale}")));
    }
    std::fs::create_dir_all(outdir).map_err(|source| Error::Io {
        path: outdir.to_path_buf(),
        source,
    })?;
    let mut w = Writer {
        dir: outdir,
        manifest: Manifest {
            figure: id,
            seed,
            scale,
            git_describe: build_id.to_string(),
            budgets: BTreeMap::new(),
            regimes: BTreeMap::new(),
        },
    };
    use MeanRegime::*;
    match id {
        FigureId::Fig1 => fig1(&mut w, seed, scale)?,
        FigureId::Fig4 => fig4(&mut w, seed, scale)?,
        FigureId::Fig5 => fig5(&mut w, seed, scale)?,
        FigureId::Fig6 => compare_panels(
            &mut w,
            "fig6",
            &[
                ((5, 10, 50), Large),
                ((10, 50, 100), Large),
                ((10, 100, 200), Large),
                ((5, 10, 50), SmallUnif),
                ((10, 50, 100), SmallUnif),
                ((10, 100, 200), SmallUnif),
            ],
            seed,
            scale,
        )?,
        FigureId::Fig7 => compare_panels(
            &mut w,
            "fig7",
            &[((5, 5, 5), CompareMixture), ((10, 10, 10), CompareMixture)],
            seed,
            scale,
        )?,
        FigureId::Fig8 => compare_panels(
            &mut w,
            "fig8",
            &[
                ((1, 100, 400), Sqrt2LogP),
                ((3, 100, 400), DominantPlusGauss),
                ((3, 100, 400), Sqrt2LogP),
            ],
            seed,
            scale,
        )?,
    }
    let path = outdir.join("manifest.json");
    let text = serde_json::to_string_pretty(&w.manifest)?;
    std::fs::write(&path, text + "\n").map_err(|source| Error::Io { path, source })?;
    Ok(w.manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_ids_parse() {
        assert_eq!("fig4".parse::<FigureId>().unwrap(), FigureId::Fig4);
        assert!(matches!("fig2".parse::<FigureId>(), Err(Error::UnknownFigure(_))));
    }

    #[test]
    fn fig4_writes_grids_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let m = reproduce_figure(FigureId::Fig4, dir.path(), 0.01, 3, "test").unwrap();
        assert_eq!(m.budgets.len(), 3);
        let text = std::fs::read_to_string(dir.path().join("fig4_rho_0.5.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), "beta1,beta2,power");
        assert_eq!(text.lines().count(), 1 + 81);
        assert!(dir.path().join("manifest.json").exists());
    }
}
