use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use spacing_core::model::{read_matrix_csv, read_vector_csv, DesignSpec, Noise};
use spacing_core::power::{power_2d, spacing_power};
use spacing_core::qmcint::IntegratorConfig;
use spacing_core::simlab::{compare_tests, pvalue_study, reproduce_figure, Scenario, StudyResult, Which};
use spacing_core::spacing::{reject, spacing_pvalue};
use spacing_core::tspacing::t_spacing_pvalue;
use spacing_core::{Error, Result};

use crate::{Command, Format, Pivot, Study};

pub fn run(cmd: Command) -> Result<String> {
    match cmd {
        Command::Test(a) => {
            let alpha = level(a.common.alpha)?;
            let x = read_matrix_csv(&a.x)?;
            let y = read_vector_csv(&a.y)?;
            let noise = match &a.sigma {
                Some(p) => Noise::KnownCovariance(read_matrix_csv(p)?),
                None => Noise::KnownCovariance(DMatrix::identity(x.nrows(), x.nrows())),
            };
            let model = DesignSpec::new(x, noise, None)?.correlation_model(&y)?;
            let res = spacing_pvalue(&model.u, &model.r)?;
            log_decision(res.p_value, alpha)?;
            render(&res, a.common.format)
        }
        Command::Ttest(a) => {
            let alpha = level(a.common.alpha)?;
            let x = read_matrix_csv(&a.x)?;
            let y = read_vector_csv(&a.y)?;
            let spec = DesignSpec::new(x, Noise::UnknownScale, None)?;
            let res = t_spacing_pvalue(spec.x(), &y)?;
            log_decision(res.p_value, alpha)?;
            render(&res, a.common.format)
        }
        Command::Power(a) => {
            let alpha = level(a.common.alpha)?;
            let cfg = IntegratorConfig::new(a.lattice_points, a.shifts, a.seed)?;
            let (mu, r) = match (&a.mu, &a.beta, &a.x, &a.r) {
                (Some(mu), None, None, Some(r)) => (read_vector_csv(mu)?, read_matrix_csv(r)?),
                (None, Some(beta), Some(x), None) => {
                    let spec = DesignSpec::new(read_matrix_csv(x)?, Noise::UnknownScale, Some(read_vector_csv(beta)?))?;
                    let r = spec.gram();
                    let mu = &r * spec.beta_star().expect("coefficients were given");
                    (mu, r)
                }
                _ => {
                    return Err(Error::Config(
                        "give either --mu with --r, or --beta with --x".into(),
                    ))
                }
            };
            render(&spacing_power(&mu, &r, alpha, &cfg)?, a.common.format)
        }
        Command::Power2d(a) => {
            let alpha = level(a.common.alpha)?;
            render(&power_2d([a.beta[0], a.beta[1]], a.rho, alpha)?, a.common.format)
        }
        Command::Simulate(a) => {
            let sc = read_scenario(&a.scenario)?;
            let result = match a.study {
                Study::Pvalue => {
                    let which = match a.which {
                        Pivot::S => Which::S,
                        Pivot::T => Which::T,
                        Pivot::Both => Which::Both,
                    };
                    StudyResult::Pvalue(pvalue_study(&sc, which)?)
                }
                Study::Compare => StudyResult::Compare(compare_tests(&sc)?),
            };
            match a.format {
                Format::Json => Ok(serde_json::to_string_pretty(&result)? + "\n"),
                Format::Csv => {
                    let mut buf = Vec::new();
                    result.write_records(&mut buf)?;
                    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
                }
            }
        }
        Command::Figure(a) => {
            let id = a.id.parse()?;
            let manifest = reproduce_figure(id, &a.out, a.scale, a.seed, env!("SPACING_BUILD_ID"))?;
            Ok(serde_json::to_string_pretty(&manifest)? + "\n")
        }
    }
}

fn level(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(Error::Domain {
            what: "significance level (need 0 < alpha < 1)",
            value: alpha,
        })
    }
}

fn log_decision(p_value: f64, alpha: f64) -> Result<()> {
    let rejected = reject(p_value, alpha)?;
    log::info!("p-value {p_value:.6e}; reject at level {alpha}: {rejected}");
    Ok(())
}

fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_json(&text)
}

/// JSON object, or a two-line CSV with the same keys in the same order.
fn render<T: Serialize>(value: &T, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(value)? + "\n"),
        Format::Csv => {
            let serde_json::Value::Object(map) = serde_json::to_value(value)? else {
                unreachable!("results serialize as objects")
            };
            let cells = map.values().map(|v| match v {
                serde_json::Value::String(s) => s.clone(),
                v => v.to_string(),
            });
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Config(format!("csv output: {e}"));
            w.write_record(map.keys()).map_err(io)?;
            w.write_record(cells).map_err(io)?;
            let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv output: {e}")))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}
