//! The five subcommands as library functions returning their outputs.

use std::path::PathBuf;

use bellshrink::glm::{self, irls_fit, spectral, FitConfig, FitResult, SpectralModel};
use bellshrink::random::Rng;
use bellshrink::shrinkage::{self, BiasingParams, EstimatorKind};
use bellshrink::simulation::{self, BetaScheme, GridConfig, SimRow};
use bellshrink::theory;

use crate::error::{CliError, CliResult};
use crate::io::{self, ColumnSpec, InputFile};
use crate::report::{
    self, DiagnosticsReport, EstimatorReport, FitSummary, InputsInfo, ParamSource, RunReport,
};

/// Condition number above which `diagnose` warns.
pub const DEFAULT_CN_WARNING: f64 = 30.0;

#[derive(Debug, Clone)]
pub struct DataArgs {
    pub input: PathBuf,
    pub columns: ColumnSpec,
}

/// User-fixed biasing parameters; unset ones are selected from the data.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub k: Option<f64>,
    pub d: Option<f64>,
}

impl Overrides {
    fn validate(&self) -> CliResult<()> {
        if let Some(k) = self.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(CliError::Validation(format!(
                    "--k must be positive and finite, got {k}"
                )));
            }
        }
        if let Some(d) = self.d {
            if !d.is_finite() {
                return Err(CliError::Validation(format!("--d must be finite, got {d}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    pub seed: Option<u64>,
    pub timestamp: bool,
}

struct Fitted {
    fit: FitResult,
    model: SpectralModel,
    report: RunReport,
}

fn load_and_fit(command: &str, args: &DataArgs, opts: ReportOptions) -> CliResult<Fitted> {
    let file = InputFile::read(&args.input)?;
    let data = io::parse_dataset_bytes(&file.bytes, &args.columns)?;
    let config = FitConfig {
        intercept: args.columns.intercept,
        ..FitConfig::default()
    };
    let fit = irls_fit(&data, &config)?;
    if !fit.converged {
        return Err(bellshrink::Error::NumericFailure(format!(
            "IRLS did not converge in {} iterations",
            fit.iterations
        ))
        .into());
    }
    let model = spectral(&data, &fit)?;
    let inputs = InputsInfo {
        path: args.input.display().to_string(),
        sha256: file.sha256,
        response: args.columns.response.clone(),
        coefficients: data.names().to_vec(),
        intercept: args.columns.intercept,
        n: data.n(),
        p: data.p(),
    };
    let summary = FitSummary {
        iterations: fit.iterations,
        converged: fit.converged,
        loglik: fit.loglik,
        monotonicity_violations: fit.monotonicity_violations,
    };
    let mut report = RunReport::new(command, inputs, summary);
    report.seed = opts.seed;
    if opts.timestamp {
        report.timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    Ok(Fitted { fit, model, report })
}

/// Resolves `(k, d)` for one estimator: overrides verbatim, the rest by the
/// data-driven rules (with `d` chosen for the resolved `k`).
pub fn resolve_params(
    kind: EstimatorKind,
    model: &SpectralModel,
    overrides: Overrides,
) -> CliResult<Option<(BiasingParams, ParamSource, ParamSource)>> {
    if !kind.is_shrinkage() {
        return Ok(None);
    }
    let alpha = &model.alpha_hat;
    let (k, k_src) = match overrides.k {
        Some(k) => (k, ParamSource::Override),
        None => (shrinkage::select_k(kind, alpha)?, ParamSource::Selected),
    };
    let (d, d_src) = match overrides.d {
        Some(d) => (d, ParamSource::Override),
        None if kind == EstimatorKind::Lte => {
            (shrinkage::d_lte(model, alpha, k)?, ParamSource::Selected)
        }
        None => (
            shrinkage::select_d(kind, model, alpha, k)?,
            ParamSource::Selected,
        ),
    };
    Ok(Some((BiasingParams::new(k, d)?, k_src, d_src)))
}

fn estimator_rows(
    fitted: &Fitted,
    kinds: &[EstimatorKind],
    overrides: Overrides,
) -> CliResult<Vec<EstimatorReport>> {
    kinds
        .iter()
        .map(|&kind| {
            let resolved = resolve_params(kind, &fitted.model, overrides)?;
            let params = resolved.map(|r| r.0);
            let est = shrinkage::evaluate(kind, &fitted.model, &fitted.fit.beta_mle, params)?;
            Ok(EstimatorReport {
                estimator: kind,
                coefficients: est.beta,
                k: params.map(|p| p.k),
                d: params.map(|p| p.d),
                k_source: resolved.map(|r| r.1),
                d_source: resolved.map(|r| r.2),
                mse: est.scalar_mse,
                squared_bias: est.squared_bias,
            })
        })
        .collect()
}

fn diagnostics_section(model: &SpectralModel, threshold: f64) -> DiagnosticsReport {
    let diag = model.diagnostics();
    DiagnosticsReport {
        eigenvalues: model.lambda.clone(),
        condition_number: diag.condition_number,
        condition_indices: diag.condition_indices,
        warning_threshold: threshold,
        severe: diag.condition_number > threshold,
    }
}

fn dedup(kinds: &[EstimatorKind]) -> Vec<EstimatorKind> {
    let mut out: Vec<EstimatorKind> = Vec::with_capacity(kinds.len());
    for &k in kinds {
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

pub fn cmd_fit(
    args: &DataArgs,
    estimators: &[EstimatorKind],
    overrides: Overrides,
    opts: ReportOptions,
) -> CliResult<RunReport> {
    overrides.validate()?;
    if estimators.is_empty() {
        return Err(CliError::Validation("no estimators requested".into()));
    }
    let fitted = load_and_fit("fit", args, opts)?;
    let rows = estimator_rows(&fitted, &dedup(estimators), overrides)?;
    let mut report = fitted.report;
    report.estimators = rows;
    Ok(report)
}

pub fn cmd_diagnose(args: &DataArgs, threshold: f64, opts: ReportOptions) -> CliResult<RunReport> {
    if !(threshold > 0.0) {
        return Err(CliError::Validation(format!(
            "warning threshold must be positive, got {threshold}"
        )));
    }
    let fitted = load_and_fit("diagnose", args, opts)?;
    let diag = diagnostics_section(&fitted.model, threshold);
    let mut report = fitted.report;
    if diag.severe {
        report.warnings.push(format!(
            "condition number {:.4} exceeds {threshold}: severe multicollinearity",
            diag.condition_number
        ));
    }
    report.diagnostics = Some(diag);
    Ok(report)
}

/// All four estimators with their risks, the diagnostics, and the seven
/// theorem verdicts. Verdicts use the overrides if both are given, else the
/// AULTE-selected parameters with any single override applied.
pub fn cmd_compare(
    args: &DataArgs,
    overrides: Overrides,
    opts: ReportOptions,
) -> CliResult<RunReport> {
    overrides.validate()?;
    let fitted = load_and_fit("compare", args, opts)?;
    let rows = estimator_rows(&fitted, &EstimatorKind::ALL, overrides)?;
    let mut report = fitted.report;
    report.estimators = rows;
    report.diagnostics = Some(diagnostics_section(&fitted.model, DEFAULT_CN_WARNING));

    match resolve_params(EstimatorKind::Aulte, &fitted.model, overrides) {
        Ok(Some((params, _, _))) => {
            report.theorems = theory::all_verdicts(&fitted.model, params, &fitted.model.alpha_hat)?;
            report.theorem_params = Some(params);
            for v in report.theorems.iter().filter(|v| !v.consistent) {
                report.warnings.push(format!(
                    "{:?}: condition holds but the difference is not positive",
                    v.theorem_id
                ));
            }
        }
        Ok(None) => {}
        Err(e) => report.warnings.push(format!("theorem checks skipped: {e}")),
    }
    Ok(report)
}

/// Analytic MSE of each estimator over a grid of `d` at fixed `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub d: f64,
    pub mse: [f64; 4],
}

pub fn d_curve(model: &SpectralModel, k: f64, points: usize) -> CliResult<Vec<CurvePoint>> {
    if points < 2 {
        return Err(CliError::Validation("curve needs at least 2 points".into()));
    }
    let (lo, hi) = shrinkage::d_bracket(model, k);
    let mle = glm::mse_mle(&model.lambda)?;
    (0..points)
        .map(|i| {
            let d = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let p = Some(BiasingParams::new(k, d)?);
            let alpha = &model.alpha_hat;
            Ok(CurvePoint {
                d,
                mse: [
                    mle,
                    shrinkage::scalar_mse(EstimatorKind::Lte, model, p, alpha)?,
                    shrinkage::scalar_mse(EstimatorKind::Aulte, model, p, alpha)?,
                    shrinkage::scalar_mse(EstimatorKind::Maulte, model, p, alpha)?,
                ],
            })
        })
        .collect()
}

/// `d`-grid MSE curve for a dataset, at `k` from the override or the AULTE rule.
pub fn cmd_curve(args: &DataArgs, k: Option<f64>, points: usize) -> CliResult<String> {
    let fitted = load_and_fit("compare", args, ReportOptions::default())?;
    let k = match k {
        Some(k) => k,
        None => shrinkage::select_k(EstimatorKind::Aulte, &fitted.model.alpha_hat)?,
    };
    let curve = d_curve(&fitted.model, k, points)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["d".to_string()];
    header.extend(EstimatorKind::ALL.iter().map(|e| e.to_string()));
    writer.write_record(&header).map_err(io::csv_write_error)?;
    for pt in curve {
        let mut rec = vec![pt.d.to_string()];
        rec.extend(pt.mse.iter().map(f64::to_string));
        writer.write_record(&rec).map_err(io::csv_write_error)?;
    }
    report::finish_csv(writer)
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub rows: Vec<SimRow>,
    pub estimators: Vec<EstimatorKind>,
    pub csv: String,
    pub json: String,
}

#[derive(serde::Serialize)]
struct SimulateDocument<'a> {
    schema_version: &'a str,
    command: &'a str,
    tool_version: &'a str,
    config: &'a GridConfig,
    rows: &'a [SimRow],
}

pub fn parse_grid_config(text: &str) -> CliResult<GridConfig> {
    serde_json::from_str(text).map_err(|e| CliError::Schema(format!("simulation config: {e}")))
}

/// Runs a simulation grid. `threads` caps parallel repetitions and does not
/// affect the results.
pub fn cmd_simulate(config: &GridConfig, threads: usize) -> CliResult<SimulateOutput> {
    let cells = config.cells()?;
    let rows = simulation::run_grid(&cells, threads)?;
    if rows.iter().all(|r| r.error.is_some()) {
        return Err(
            bellshrink::Error::CellFailure(rows[0].error.clone().unwrap_or_default()).into(),
        );
    }
    let estimators = dedup(&config.estimators);
    let csv = report::render_sim_csv(&rows, &estimators)?;
    let json = report::render_json(&SimulateDocument {
        schema_version: report::SCHEMA_VERSION,
        command: "simulate",
        tool_version: report::TOOL_VERSION,
        config,
        rows: &rows,
    });
    Ok(SimulateOutput {
        rows,
        estimators,
        csv,
        json,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum BetaArg {
    Scheme(BetaScheme),
    Values(Vec<f64>),
}

impl std::str::FromStr for BetaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unit-norm" => Ok(Self::Scheme(BetaScheme::UnitNorm)),
            "ones" => Ok(Self::Scheme(BetaScheme::Ones)),
            _ => s
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| format!("bad beta entry '{v}': {e}"))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Self::Values),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleArgs {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub beta: BetaArg,
    pub seed: u64,
}

/// Synthetic dataset from the simulation design, as CSV text.
pub fn cmd_sample(args: &SampleArgs) -> CliResult<String> {
    if args.n == 0 || args.p == 0 {
        return Err(CliError::Validation("n and p must be positive".into()));
    }
    let beta = match &args.beta {
        BetaArg::Scheme(s) => s.vector(args.p),
        BetaArg::Values(v) => v.clone(),
    };
    if beta.len() != args.p {
        return Err(CliError::Validation(format!(
            "beta has {} entries, expected {}",
            beta.len(),
            args.p
        )));
    }
    let mut rng = Rng::new(args.seed);
    let x = simulation::gen_design(&mut rng, args.n, args.p, args.rho, false)?;
    let y = simulation::gen_response(&mut rng, &x, &beta)?;
    let mut buf = Vec::new();
    io::write_sample(&mut buf, &x, &y)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}
