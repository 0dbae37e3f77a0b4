//! Dataset ingestion and tabular output.

use std::fs;
use std::io::Write;
use std::path::Path;

use bellshrink::glm::Dataset;
use bellshrink::Matrix;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Column selection for [`parse_dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub response: String,
    /// `None` selects every column other than the response, in file order.
    pub features: Option<Vec<String>>,
    pub intercept: bool,
}

/// File contents plus their SHA-256, so a report can name exactly what it read.
#[derive(Debug, Clone)]
pub struct InputFile {
    pub bytes: Vec<u8>,
    pub sha256: String,
}

impl InputFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let sha256 = sha256_hex(&bytes);
        Ok(Self { bytes, sha256 })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn parse_dataset(path: &Path, columns: &ColumnSpec) -> CliResult<Dataset> {
    parse_dataset_bytes(&InputFile::read(path)?.bytes, columns)
}

/// Parses a headed CSV into a [`Dataset`] with the selected columns in the
/// declared order. Rows are numbered from 1 after the header.
pub fn parse_dataset_bytes(bytes: &[u8], columns: &ColumnSpec) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Schema(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(CliError::Schema("missing header row".into()));
    }
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Schema(format!("column '{name}' not found in header")))
    };
    let response_idx = find(&columns.response)?;
    let feature_names: Vec<String> = match &columns.features {
        Some(list) => list.clone(),
        None => header
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != response_idx)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    if feature_names.is_empty() {
        return Err(CliError::Schema("no feature columns selected".into()));
    }
    let feature_idx = feature_names
        .iter()
        .map(|f| find(f))
        .collect::<CliResult<Vec<_>>>()?;
    if feature_idx.contains(&response_idx) {
        return Err(CliError::Schema(format!(
            "response column '{}' is also listed as a feature",
            columns.response
        )));
    }

    let mut y = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Schema(format!("row {row}: {e}")))?;
        let cell = &record[response_idx];
        y.push(parse_count(cell).ok_or_else(|| {
            CliError::Validation(format!(
                "row {row}: response '{}' value \"{cell}\" is not a nonnegative integer",
                columns.response
            ))
        })?);
        for (&j, name) in feature_idx.iter().zip(&feature_names) {
            let cell = &record[j];
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    CliError::Validation(format!(
                        "row {row}: column '{name}' value \"{cell}\" is not a finite number"
                    ))
                })?;
            values.push(v);
        }
    }
    if y.is_empty() {
        return Err(CliError::Validation("dataset has no rows".into()));
    }
    let x = Matrix::new(y.len(), feature_names.len(), values)?;
    let data = Dataset::new(x, y, feature_names)?;
    Ok(if columns.intercept {
        data.with_intercept()?
    } else {
        data
    })
}

/// Accepts integers, and decimals with no fractional part such as `3.0`.
fn parse_count(cell: &str) -> Option<u64> {
    if let Ok(v) = cell.parse::<u64>() {
        return Some(v);
    }
    let v: f64 = cell.parse().ok()?;
    (v >= 0.0 && v.fract() == 0.0 && v < 9.007_199_254_740_992e15).then_some(v as u64)
}

/// Writes `y` followed by the columns of `x` named `x1..xp`. Floats use the
/// shortest representation that parses back to the same value.
pub fn write_sample<W: Write>(out: W, x: &Matrix, y: &[u64]) -> CliResult<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["y".to_string()];
    header.extend((1..=x.cols()).map(|j| format!("x{j}")));
    writer.write_record(&header).map_err(csv_write_error)?;
    for (i, yi) in y.iter().enumerate() {
        let mut record = vec![yi.to_string()];
        record.extend(x.row(i).iter().map(f64::to_string));
        writer.write_record(&record).map_err(csv_write_error)?;
    }
    writer
        .flush()
        .map_err(|e| CliError::io("<csv output>", e))?;
    Ok(())
}

pub(crate) fn csv_write_error(e: csv::Error) -> CliError {
    CliError::io("<csv output>", std::io::Error::other(e))
}

pub fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
