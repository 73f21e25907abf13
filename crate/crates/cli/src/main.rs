use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Spacing and t-spacing tests for the first two LARS knots.
#[derive(Debug, Parser)]
#[command(name = "spacing", version = env!("SPACING_BUILD_ID"))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spacing test with known noise covariance (identity unless --sigma).
    Test(TestArgs),
    /// t-spacing test with unknown noise scale.
    Ttest(TtestArgs),
    /// Exact power P{S <= alpha} by randomized lattice integration.
    Power(PowerArgs),
    /// Exact power in two dimensions by quadrature.
    Power2d(Power2dArgs),
    /// Runs a simulation study described by a scenario JSON file.
    Simulate(SimulateArgs),
    /// Writes the CSV panels of a figure and its manifest.
    Figure(FigureArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Significance level in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// Design matrix (n x p CSV).
    #[arg(long = "x", visible_alias = "X")]
    x: PathBuf,
    /// Response vector (n values).
    #[arg(long = "y", visible_alias = "Y")]
    y: PathBuf,
    /// Known noise covariance (n x n CSV).
    #[arg(long)]
    sigma: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct TtestArgs {
    #[arg(long = "x", visible_alias = "X")]
    x: PathBuf,
    #[arg(long = "y", visible_alias = "Y")]
    y: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct PowerArgs {
    /// Mean of U (p values); requires --r.
    #[arg(long, conflicts_with_all = ["beta", "x"], requires = "r")]
    mu: Option<PathBuf>,
    /// Coefficients (p values); requires --x.
    #[arg(long, requires = "x")]
    beta: Option<PathBuf>,
    /// Design matrix; the mean is X'Xb and R = X'X after normalisation.
    #[arg(long = "x", visible_alias = "X", conflicts_with = "r")]
    x: Option<PathBuf>,
    /// Covariance R of U (p x p CSV).
    #[arg(long = "r", visible_alias = "R")]
    r: Option<PathBuf>,
    /// Lattice points per shift.
    #[arg(long = "N", visible_alias = "lattice-points", default_value_t = 1 << 12)]
    lattice_points: usize,
    /// Number of random shifts.
    #[arg(long = "M", visible_alias = "shifts", default_value_t = 25)]
    shifts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Power2dArgs {
    #[arg(long, num_args = 2, value_names = ["B1", "B2"], allow_negative_numbers = true, required = true)]
    beta: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rho: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Study {
    /// Null and alternative p-values of S and/or T.
    Pvalue,
    /// Spacing power against the chi-square test.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Pivot {
    S,
    T,
    Both,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = Study::Pvalue)]
    study: Study,
    /// Pivots recorded by the p-value study.
    #[arg(long, value_enum, default_value_t = Pivot::Both)]
    which: Pivot,
    /// csv: per-replicate records; json: summary.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct FigureArgs {
    /// One of fig1, fig4, fig5, fig6, fig7, fig8.
    id: String,
    #[arg(long)]
    out: PathBuf,
    /// Multiplier on replicate counts and grid sizes.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("SPACING_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("SPACING_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match commands::run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_degenerate() { 3 } else { 2 })
        }
    }
}
