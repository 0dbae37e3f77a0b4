use std::io::Write;
use std::path::PathBuf;

use bellshrink::shrinkage::EstimatorKind;
use bellshrink::simulation::default_threads;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{self, BetaArg, DataArgs, Overrides, ReportOptions, SampleArgs};
use crate::error::{CliError, CliResult};
use crate::io::{write_file, ColumnSpec};
use crate::report::{self, RunReport};

/// Environment variable capping the number of simulation worker threads.
pub const THREADS_ENV: &str = "BELLSHRINK_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "bellshrink",
    version,
    about = "Bell regression with Liu-type shrinkage estimators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the Bell regression and the requested estimators.
    Fit(FitArgs),
    /// Eigenvalues, condition number and condition indices of XᵀŴX.
    Diagnose(DiagnoseArgs),
    /// All four estimators side by side, with theorem checks.
    Compare(CompareArgs),
    /// Run a Monte Carlo grid described by a JSON config.
    Simulate(SimulateArgs),
    /// Write a synthetic dataset drawn from the simulation design.
    Sample(SampleCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Args)]
pub struct DataOpts {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the count response column.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Comma-separated feature columns; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct OutputOpts {
    /// Write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rendering printed to standard output.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Recorded in the report.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include the wall-clock time in the report.
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Args)]
pub struct ParamOpts {
    /// Fix the biasing parameter k for every shrinkage estimator.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// Fix the biasing parameter d for every shrinkage estimator.
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataOpts,
    /// Fit without an intercept column.
    #[arg(long)]
    pub no_intercept: bool,
    /// Comma-separated subset of mle, lte, aulte, maulte.
    #[arg(long, value_delimiter = ',', default_value = "mle,lte,aulte,maulte")]
    pub estimators: Vec<EstimatorKind>,
    #[command(flatten)]
    pub params: ParamOpts,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataOpts,
    /// Fit with an intercept column (off by default).
    #[arg(long, conflicts_with = "no_intercept")]
    pub intercept: bool,
    /// Accepted for symmetry with `fit`; this is the default.
    #[arg(long)]
    pub no_intercept: bool,
    /// Warn when the condition number exceeds this value.
    #[arg(long, default_value_t = commands::DEFAULT_CN_WARNING)]
    pub warn_cn: f64,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataOpts,
    /// Fit with an intercept column (off by default).
    #[arg(long, conflicts_with = "no_intercept")]
    pub intercept: bool,
    /// Accepted for symmetry with `fit`; this is the default.
    #[arg(long)]
    pub no_intercept: bool,
    #[command(flatten)]
    pub params: ParamOpts,
    /// Also write analytic MSE against d (at the AULTE or overridden k) as CSV.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, default_value_t = 201)]
    pub curve_points: usize,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output path stem; `.csv` and `.json` files are written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Replace the seed given in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SampleCmd {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// `unit-norm`, `ones`, or a comma-separated list of p coefficients.
    #[arg(long, default_value = "unit-norm", allow_hyphen_values = true)]
    pub beta: BetaArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn data_args(opts: DataOpts, intercept: bool) -> DataArgs {
    DataArgs {
        input: opts.input,
        columns: ColumnSpec {
            response: opts.response,
            features: opts.features,
            intercept,
        },
    }
}

fn report_options(o: &OutputOpts) -> ReportOptions {
    ReportOptions {
        seed: o.seed,
        timestamp: o.timestamp,
    }
}

fn overrides(p: &ParamOpts) -> Overrides {
    Overrides { k: p.k, d: p.d }
}

/// Thread cap from `BELLSHRINK_THREADS`, else the available parallelism.
pub fn thread_cap() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                CliError::Validation(format!(
                    "{THREADS_ENV} must be a positive integer, got '{v}'"
                ))
            }),
        Err(_) => Ok(default_threads()),
    }
}

fn emit_report(report: &RunReport, output: &OutputOpts, stdout: &mut dyn Write) -> CliResult<()> {
    if let Some(path) = &output.out {
        write_file(path, report::render_json(report).as_bytes())?;
    }
    let text = match output.format {
        Format::Json => report::render_json(report),
        Format::Csv => report::render_csv(report)?,
        Format::Table => report::render_table(report),
    };
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Fit(a) => {
            let report = commands::cmd_fit(
                &data_args(a.data, !a.no_intercept),
                &a.estimators,
                overrides(&a.params),
                report_options(&a.output),
            )?;
            emit_report(&report, &a.output, stdout)
        }
        Command::Diagnose(a) => {
            let report = commands::cmd_diagnose(
                &data_args(a.data, a.intercept),
                a.warn_cn,
                report_options(&a.output),
            )?;
            emit_report(&report, &a.output, stdout)
        }
        Command::Compare(a) => {
            let data = data_args(a.data, a.intercept);
            let ov = overrides(&a.params);
            let report = commands::cmd_compare(&data, ov, report_options(&a.output))?;
            if let Some(path) = &a.curve {
                let csv = commands::cmd_curve(&data, ov.k, a.curve_points)?;
                write_file(path, csv.as_bytes())?;
            }
            emit_report(&report, &a.output, stdout)
        }
        Command::Simulate(a) => {
            let text =
                std::fs::read_to_string(&a.config).map_err(|e| CliError::io(&a.config, e))?;
            let mut config = commands::parse_grid_config(&text)?;
            if let Some(seed) = a.seed {
                config.seed = seed;
            }
            let out = commands::cmd_simulate(&config, thread_cap()?)?;
            write_file(&a.out.with_extension("csv"), out.csv.as_bytes())?;
            write_file(&a.out.with_extension("json"), out.json.as_bytes())?;
            let text = match a.format {
                Format::Json => out.json.clone(),
                Format::Csv => out.csv.clone(),
                Format::Table => report::render_sim_table(&out.rows, &out.estimators),
            };
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io("<stdout>", e))?;
            for row in out.rows.iter().filter(|r| r.error.is_some()) {
                eprintln!(
                    "warning: cell rho={} n={} p={} failed: {}",
                    row.rho,
                    row.n,
                    row.p,
                    row.error.as_deref().unwrap_or_default()
                );
            }
            Ok(())
        }
        Command::Sample(a) => {
            let csv = commands::cmd_sample(&SampleArgs {
                n: a.n,
                p: a.p,
                rho: a.rho,
                beta: a.beta,
                seed: a.seed,
            })?;
            write_file(&a.out, csv.as_bytes())
        }
    }
}
