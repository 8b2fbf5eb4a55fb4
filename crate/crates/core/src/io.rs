//! Dataset ingestion and JSON result documents.
//!
//! Two input formats are accepted:
//!
//! * CSV: comma separated, `.` decimal point, optional single header row.
//! * `f64le`: the 4-byte magic `FWSR`, then `u32` rows and `u32` cols (little
//!   endian), then `rows * cols` little-endian `f64` values in row-major order.
//!
//! Either way the result is normalized to the internal `d x n` layout with one
//! data point per column.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::DenseMatrix;
use crate::solver::Status;

pub const F64LE_MAGIC: &[u8; 4] = b"FWSR";
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: input contains no data")]
    Empty { path: PathBuf },

    #[error("{path}: line {line}: expected {expected} fields, found {found}")]
    RaggedRow { path: PathBuf, line: u64, expected: usize, found: usize },

    #[error("{path}: line {line}, column {column}: cannot parse {value:?} as a number")]
    NonNumeric { path: PathBuf, line: u64, column: usize, value: String },

    #[error("{path}: line {line}, column {column}: value {value} is not finite")]
    NonFinite { path: PathBuf, line: u64, column: usize, value: String },

    #[error("{path}: malformed csv near line {line}: {message}")]
    Csv { path: PathBuf, line: u64, message: String },

    #[error("{path}: bad magic at offset 0, expected \"FWSR\"")]
    BadMagic { path: PathBuf },

    #[error("{path}: truncated at offset {offset}: expected {expected} bytes, found {found}")]
    Truncated { path: PathBuf, offset: usize, expected: usize, found: usize },

    #[error("{path}: non-finite value at offset {offset}")]
    NonFiniteBinary { path: PathBuf, offset: usize },

    #[error("{path}: label column {column} not found")]
    MissingLabelColumn { path: PathBuf, column: String },

    #[error("labels require csv input with points as rows")]
    LabelsUnsupported,

    #[error("{0}")]
    Matrix(#[from] crate::error::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    Csv,
    F64le,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    PointsAsRows,
    PointsAsCols,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    pub path: PathBuf,
    pub format: InputFormat,
    pub orientation: Orientation,
    pub has_header: bool,
    pub label_column: Option<LabelColumn>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    /// `d x n`, one data point per column.
    pub matrix: DenseMatrix,
    /// One label per data point, when a label column was requested.
    pub labels: Option<Vec<String>>,
}

pub fn load_matrix(spec: &InputSpec) -> Result<LoadedData, InputError> {
    let path = spec.path.as_path();
    let bytes = fs::read(path).map_err(|source| InputError::Io { path: path.into(), source })?;
    match spec.format {
        InputFormat::Csv => parse_csv(path, &bytes[..], spec),
        InputFormat::F64le => {
            if spec.label_column.is_some() {
                return Err(InputError::LabelsUnsupported);
            }
            let (rows, cols, data) = parse_f64le(path, &bytes)?;
            let file_matrix = DenseMatrix::from_row_major(rows, cols, &data)?;
            Ok(LoadedData { matrix: orient(file_matrix, spec.orientation), labels: None })
        }
    }
}

/// `file_matrix` holds the file's rows as matrix rows.
fn orient(file_matrix: DenseMatrix, orientation: Orientation) -> DenseMatrix {
    match orientation {
        Orientation::PointsAsRows => file_matrix.transpose(),
        Orientation::PointsAsCols => file_matrix,
    }
}

pub fn parse_csv<R: Read>(path: &Path, reader: R, spec: &InputSpec) -> Result<LoadedData, InputError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(spec.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let label_idx = match &spec.label_column {
        None => None,
        Some(_) if spec.orientation != Orientation::PointsAsRows => {
            return Err(InputError::LabelsUnsupported)
        }
        Some(LabelColumn::Index(i)) => Some(*i),
        Some(LabelColumn::Name(name)) => {
            let headers = rdr.headers().map_err(|e| csv_error(path, &e))?;
            let found = if spec.has_header { headers.iter().position(|h| h == name) } else { None };
            match found.or_else(|| name.parse().ok()) {
                Some(i) => Some(i),
                None => {
                    return Err(InputError::MissingLabelColumn { path: path.into(), column: name.clone() })
                }
            }
        }
    };

    let mut width: Option<usize> = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut nrows = 0usize;
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, &e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(InputError::RaggedRow { path: path.into(), line, expected, found: record.len() });
        }
        if let Some(li) = label_idx {
            if li >= record.len() {
                return Err(InputError::MissingLabelColumn { path: path.into(), column: li.to_string() });
            }
        }
        for (column, field) in record.iter().enumerate() {
            if Some(column) == label_idx {
                labels.push(field.to_string());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| InputError::NonNumeric {
                path: path.into(),
                line,
                column,
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(InputError::NonFinite { path: path.into(), line, column, value: field.to_string() });
            }
            values.push(v);
        }
        nrows += 1;
    }
    let ncols = width.unwrap_or(0) - usize::from(label_idx.is_some());
    if nrows == 0 || ncols == 0 {
        return Err(InputError::Empty { path: path.into() });
    }
    let file_matrix = DenseMatrix::from_row_major(nrows, ncols, &values)?;
    Ok(LoadedData {
        matrix: orient(file_matrix, spec.orientation),
        labels: label_idx.map(|_| labels),
    })
}

fn csv_error(path: &Path, e: &csv::Error) -> InputError {
    let line = e.position().map_or(0, |p| p.line());
    InputError::Csv { path: path.into(), line, message: e.to_string() }
}

/// Returns `(rows, cols, row-major values)`.
pub fn parse_f64le(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), InputError> {
    if bytes.is_empty() {
        return Err(InputError::Empty { path: path.into() });
    }
    if bytes.len() < 12 {
        if bytes.len() < 4 || &bytes[..4] != F64LE_MAGIC {
            return Err(InputError::BadMagic { path: path.into() });
        }
        return Err(InputError::Truncated { path: path.into(), offset: bytes.len(), expected: 12, found: bytes.len() });
    }
    if &bytes[..4] != F64LE_MAGIC {
        return Err(InputError::BadMagic { path: path.into() });
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    if rows == 0 || cols == 0 {
        return Err(InputError::Empty { path: path.into() });
    }
    let payload = &bytes[12..];
    let expected = rows * cols * 8;
    if payload.len() != expected {
        return Err(InputError::Truncated {
            path: path.into(),
            offset: 12 + payload.len().min(expected),
            expected: 12 + expected,
            found: bytes.len(),
        });
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        if !v.is_finite() {
            return Err(InputError::NonFiniteBinary { path: path.into(), offset: 12 + 8 * i });
        }
        data.push(v);
    }
    Ok((rows, cols, data))
}

/// Serializes a row-major matrix in the `f64le` format.
pub fn encode_f64le(rows: u32, cols: u32, row_major: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * row_major.len());
    out.extend_from_slice(F64LE_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for v in row_major {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Column indices of each class, keyed by label.
pub fn class_partition(labels: &[String]) -> BTreeMap<String, Vec<usize>> {
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        out.entry(l.clone()).or_default().push(i);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSelection {
    /// Global column indices.
    pub exemplar_indices: Vec<usize>,
    pub status: Status,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub gap_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: String,
    pub command: Vec<String>,
    /// Fully resolved parameters, defaults included.
    pub config: serde_json::Value,
    /// Set for whole-dataset selection.
    pub exemplar_indices: Option<Vec<usize>>,
    /// Set for per-class selection.
    pub classes: Option<BTreeMap<String, ClassSelection>>,
    pub status: Status,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub gap_trace: Vec<f64>,
    pub elapsed_ms: f64,
    pub seed: u64,
}

impl ResultDocument {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
