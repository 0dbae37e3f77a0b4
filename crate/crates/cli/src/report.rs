//! Report types and their renderings.

use std::fmt::Write as _;

use bellshrink::shrinkage::{BiasingParams, EstimatorKind};
use bellshrink::simulation::SimRow;
use bellshrink::theory::TheoremVerdict;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::io::csv_write_error;

/// Version of the JSON report layout described by `schema/report.schema.json`.
pub const SCHEMA_VERSION: &str = "1.0.0";

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSource {
    Selected,
    Override,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch; only present when requested so that
    /// reports are reproducible by default.
    pub timestamp_unix: Option<u64>,
    pub inputs: InputsInfo,
    pub fit: FitSummary,
    pub estimators: Vec<EstimatorReport>,
    pub diagnostics: Option<DiagnosticsReport>,
    /// Parameters at which `theorems` were evaluated.
    pub theorem_params: Option<BiasingParams>,
    pub theorems: Vec<TheoremVerdict>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, inputs: InputsInfo, fit: FitSummary) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            command: command.into(),
            tool_version: TOOL_VERSION.into(),
            seed: None,
            timestamp_unix: None,
            inputs,
            fit,
            estimators: Vec::new(),
            diagnostics: None,
            theorem_params: None,
            theorems: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn estimator(&self, kind: EstimatorKind) -> Option<&EstimatorReport> {
        self.estimators.iter().find(|e| e.estimator == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputsInfo {
    pub path: String,
    pub sha256: String,
    pub response: String,
    /// Coefficient names in model order, including `(Intercept)` if fitted.
    pub coefficients: Vec<String>,
    pub intercept: bool,
    pub n: usize,
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub iterations: usize,
    pub converged: bool,
    pub loglik: f64,
    pub monotonicity_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimator: EstimatorKind,
    pub coefficients: Vec<f64>,
    pub k: Option<f64>,
    pub d: Option<f64>,
    pub k_source: Option<ParamSource>,
    pub d_source: Option<ParamSource>,
    /// Plug-in scalar MSE at the estimated canonical coefficients.
    pub mse: f64,
    pub squared_bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub eigenvalues: Vec<f64>,
    pub condition_number: f64,
    pub condition_indices: Vec<f64>,
    pub warning_threshold: f64,
    pub severe: bool,
}

fn fmt4(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

/// Table with one column per estimator: coefficients, then `k`, `d`, MSE
/// and SB rows.
fn estimator_grid(report: &RunReport) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["term".to_string()];
    header.extend(report.estimators.iter().map(|e| e.estimator.to_string()));
    let mut rows = Vec::new();
    for (j, name) in report.inputs.coefficients.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(
            report
                .estimators
                .iter()
                .map(|e| e.coefficients[j].to_string()),
        );
        rows.push(row);
    }
    let mut push = |label: &str, f: &dyn Fn(&EstimatorReport) -> Option<f64>| {
        let mut row = vec![label.to_string()];
        row.extend(
            report
                .estimators
                .iter()
                .map(|e| f(e).map_or_else(String::new, |v| v.to_string())),
        );
        rows.push(row);
    };
    push("k", &|e| e.k);
    push("d", &|e| e.d);
    push("MSE", &|e| Some(e.mse));
    push("SB", &|e| Some(e.squared_bias));
    (header, rows)
}

pub fn render_table(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} on {} (n = {}, p = {}), IRLS {} after {} iterations, log-likelihood {:.4}",
        report.command,
        report.inputs.path,
        report.inputs.n,
        report.inputs.p,
        if report.fit.converged {
            "converged"
        } else {
            "did not converge"
        },
        report.fit.iterations,
        report.fit.loglik
    );
    if !report.estimators.is_empty() {
        let (header, rows) = estimator_grid(report);
        let width = rows.iter().map(|r| r[0].len()).max().unwrap_or(4).max(4);
        let _ = writeln!(out);
        let _ = write!(out, "{:<width$}", header[0]);
        for h in &header[1..] {
            let _ = write!(out, " {h:>12}");
        }
        let _ = writeln!(out);
        for row in rows {
            let _ = write!(out, "{:<width$}", row[0]);
            for cell in &row[1..] {
                let v = cell.parse::<f64>().ok();
                let _ = write!(out, " {:>12}", fmt4(v));
            }
            let _ = writeln!(out);
        }
    }
    if let Some(d) = &report.diagnostics {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:>4} {:>16} {:>16}",
            "j", "eigenvalue", "condition index"
        );
        for (j, (l, c)) in d.eigenvalues.iter().zip(&d.condition_indices).enumerate() {
            let _ = writeln!(out, "{:>4} {:>16.4} {:>16.4}", j + 1, l, c);
        }
        let _ = writeln!(out, "condition number {:.4}", d.condition_number);
    }
    if !report.theorems.is_empty() {
        let _ = writeln!(out);
        if let Some(p) = report.theorem_params {
            let _ = writeln!(out, "theorem checks at k = {:.4}, d = {:.4}", p.k, p.d);
        }
        let _ = writeln!(
            out,
            "{:<4} {:<9} {:<9} {:<9} {:>14} {:<10}",
            "id", "condition", "interval", "superior", "difference", "consistent"
        );
        let yn = |b: Option<bool>| b.map_or("-", |b| if b { "yes" } else { "no" });
        for v in &report.theorems {
            let _ = writeln!(
                out,
                "{:<4} {:<9} {:<9} {:<9} {:>14.4e} {:<10}",
                format!("{:?}", v.theorem_id),
                yn(Some(v.condition_holds)),
                yn(v.stated_interval_holds),
                yn(v.superior),
                v.difference_value,
                yn(Some(v.consistent))
            );
        }
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

pub fn render_csv(report: &RunReport) -> CliResult<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    if report.estimators.is_empty() {
        if let Some(d) = &report.diagnostics {
            writer
                .write_record(["j", "eigenvalue", "condition_index"])
                .map_err(csv_write_error)?;
            for (j, (l, c)) in d.eigenvalues.iter().zip(&d.condition_indices).enumerate() {
                writer
                    .write_record([(j + 1).to_string(), l.to_string(), c.to_string()])
                    .map_err(csv_write_error)?;
            }
        }
    } else {
        let (header, rows) = estimator_grid(report);
        writer.write_record(&header).map_err(csv_write_error)?;
        for row in rows {
            writer.write_record(&row).map_err(csv_write_error)?;
        }
    }
    finish_csv(writer)
}

pub fn render_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialise");
    s.push('\n');
    s
}

pub(crate) fn finish_csv(writer: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = writer
        .into_inner()
        .map_err(|e| crate::error::CliError::io("<csv output>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is built from UTF-8 strings"))
}

/// Simulation rows: cell coordinates, status, then MSE, standard error,
/// squared bias and failure count per estimator.
pub fn render_sim_csv(rows: &[SimRow], estimators: &[EstimatorKind]) -> CliResult<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["rho", "n", "p", "n_reps", "seed", "status"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for e in estimators {
        for col in ["mse", "se", "sb", "failed"] {
            header.push(format!("{e}_{col}"));
        }
    }
    writer.write_record(&header).map_err(csv_write_error)?;
    for row in rows {
        let mut rec = vec![
            row.rho.to_string(),
            row.n.to_string(),
            row.p.to_string(),
            row.n_reps.to_string(),
            row.seed.to_string(),
            row.error.clone().unwrap_or_else(|| "ok".into()),
        ];
        for &e in estimators {
            match row.stats.iter().find(|s| s.kind == e) {
                Some(s) => rec.extend([
                    s.sim_mse.to_string(),
                    s.standard_error().to_string(),
                    s.sim_sb.to_string(),
                    s.n_failed.to_string(),
                ]),
                None => rec.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    row.n_reps.to_string(),
                ]),
            }
        }
        writer.write_record(&rec).map_err(csv_write_error)?;
    }
    finish_csv(writer)
}

/// Human-readable simulation table in the layout MSE (se) per estimator.
pub fn render_sim_table(rows: &[SimRow], estimators: &[EstimatorKind]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:>6} {:>6} {:>4}", "rho", "n", "p");
    for e in estimators {
        let _ = write!(out, " {:>22}", e.as_str());
    }
    let _ = writeln!(out);
    for row in rows {
        let _ = write!(out, "{:>6} {:>6} {:>4}", row.rho, row.n, row.p);
        if let Some(err) = &row.error {
            let _ = writeln!(out, " failed: {err}");
            continue;
        }
        for &e in estimators {
            let cell = row.stats.iter().find(|s| s.kind == e).map_or_else(
                || "-".to_string(),
                |s| format!("{:.4} ({:.4})", s.sim_mse, s.standard_error()),
            );
            let _ = write!(out, " {cell:>22}");
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "squared bias");
    for row in rows.iter().filter(|r| r.error.is_none()) {
        let _ = write!(out, "{:>6} {:>6} {:>4}", row.rho, row.n, row.p);
        for &e in estimators {
            let cell = row
                .stats
                .iter()
                .find(|s| s.kind == e)
                .map_or_else(|| "-".to_string(), |s| format!("{:.4}", s.sim_sb));
            let _ = write!(out, " {cell:>22}");
        }
        let _ = writeln!(out);
    }
    out
}
