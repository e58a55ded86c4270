//! Deterministic matrix generation and the on-disk formats for matrices,
//! traces and ring samples.
//!
//! # Generator
//!
//! [`generate_gaussian`] is generator [`GENERATOR_ID`]: a ChaCha20 stream
//! (`rand_chacha::ChaCha20Rng::seed_from_u64(seed)`, rand_core 0.6 seeding)
//! feeding the basic Box–Muller transform. Each pair of `u64` draws `a, b`
//! becomes
//!
//! ```text
//! u1 = ((a >> 11) + 1) · 2⁻⁵³        in (0, 1]
//! u2 = (b >> 11) · 2⁻⁵³              in [0, 1)
//! r  = sqrt(-2 ln u1)
//! z0 = r cos(2π u2),  z1 = r sin(2π u2)
//! ```
//!
//! and the matrix is filled row-major with `mean + sqrt(variance) · z`,
//! consuming `z0` then `z1`. An odd entry count discards the final `z1`.
//!
//! # Numeric text
//!
//! Every real is written as the shortest decimal that parses back to the
//! same double (Rust's `{:?}` formatting), so files diff cleanly and
//! round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drivers::Trace;
use crate::error::NormError;
use crate::fixedpoint::RingSample;
use crate::matrix::Matrix;

pub const GENERATOR_ID: &str = "chacha20-box-muller/1";
pub const TRACE_SCHEMA: &str = "matnorm-trace/1";
pub const TRACE_CSV_HEADER: &str =
    "iteration,step_sq,log10_step_sq,sum_sq,max_abs_mean,max_std_dev,log10_ratio";
pub const RING_CSV_HEADER: &str = "seed,iterations,c1,c2,c3,u1,u2,u3";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("ragged rows: line {line} has {found} fields, expected {expected}")]
    RaggedRows {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("non-numeric cell at row {row}, column {col}: {value:?}")]
    NonNumericCell {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("empty file")]
    EmptyFile,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported trace schema {0:?}, expected {TRACE_SCHEMA:?}")]
    Schema(String),
    #[error("invalid generator spec {0:?}: expected ROWSxCOLS,MEAN,VARIANCE,SEED")]
    GenSpec(String),
    #[error(transparent)]
    Matrix(#[from] NormError),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

/// Parameters of a seeded Gaussian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub rows: usize,
    pub cols: usize,
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn standard(rows: usize, cols: usize, seed: u64) -> Self {
        GenSpec {
            rows,
            cols,
            mean: 0.0,
            variance: 1.0,
            seed,
        }
    }
}

/// Parses `ROWSxCOLS,MEAN,VARIANCE,SEED`, e.g. `5x5,2,4,42`.
impl FromStr for GenSpec {
    type Err = IoError;

    fn from_str(s: &str) -> IoResult<Self> {
        let bad = || IoError::GenSpec(s.to_string());
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [shape, mean, variance, seed] = parts[..] else {
            return Err(bad());
        };
        let (rows, cols) = shape.split_once(['x', 'X']).ok_or_else(bad)?;
        let spec = GenSpec {
            rows: rows.trim().parse().map_err(|_| bad())?,
            cols: cols.trim().parse().map_err(|_| bad())?,
            mean: mean.parse().map_err(|_| bad())?,
            variance: variance.parse().map_err(|_| bad())?,
            seed: seed.parse().map_err(|_| bad())?,
        };
        let valid = spec.rows > 0
            && spec.cols > 0
            && spec.mean.is_finite()
            && spec.variance.is_finite()
            && spec.variance >= 0.0;
        if valid {
            Ok(spec)
        } else {
            Err(bad())
        }
    }
}

/// Draws `rows × cols` independent Normal(mean, variance) entries; see the
/// module docs for the exact generator.
pub fn generate_gaussian(spec: &GenSpec) -> Result<Matrix, NormError> {
    let n = spec.rows * spec.cols;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let sd = spec.variance.sqrt();
    let mut data = Vec::with_capacity(n + 1);
    while data.len() < n {
        let (z0, z1) = box_muller(&mut rng);
        data.push(spec.mean + sd * z0);
        data.push(spec.mean + sd * z1);
    }
    data.truncate(n);
    Matrix::new(spec.rows, spec.cols, data)
}

fn box_muller(rng: &mut ChaCha20Rng) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * SCALE;
    let u2 = (rng.next_u64() >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses a comma-separated numeric matrix. A first line with no numeric
/// cell is taken as a header and skipped.
pub fn parse_matrix_csv(text: &str) -> IoResult<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut cols = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && record.iter().all(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(IoError::RaggedRows {
                line: record.position().map_or(k as u64 + 1, |p| p.line()),
                expected,
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let value = cell.parse::<f64>().map_err(|_| IoError::NonNumericCell {
                row: rows,
                col,
                value: cell.to_string(),
            })?;
            data.push(value);
        }
        rows += 1;
    }
    let cols = cols.ok_or(IoError::EmptyFile)?;
    Ok(Matrix::new(rows, cols, data)?)
}

pub fn format_matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> IoResult<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_matrix_csv(&text)
}

pub fn write_matrix_csv(m: &Matrix, path: impl AsRef<Path>) -> IoResult<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix_csv(m)).map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Json,
}

impl TraceFormat {
    /// `.json` selects JSON; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => TraceFormat::Json,
            _ => TraceFormat::Csv,
        }
    }
}

/// Per-iteration diagnostics as CSV. `log10_ratio` on row `n` is
/// `log10(step_sq(n) / step_sq(n - 1))` and is blank on the first row.
pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    let mut prev: Option<f64> = None;
    for r in &trace.records {
        let ratio = prev.map_or(String::new(), |p| fmt_f64((r.step_sq / p).log10()));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.index,
            fmt_f64(r.step_sq),
            fmt_f64(r.step_sq.log10()),
            fmt_f64(r.sum_sq),
            fmt_f64(r.max_abs_mean),
            fmt_f64(r.max_std_dev),
            ratio
        );
        prev = Some(r.step_sq);
    }
    out
}

#[derive(Serialize)]
struct TraceDocRef<'a> {
    schema: &'static str,
    #[serde(flatten)]
    trace: &'a Trace,
}

#[derive(Deserialize)]
struct TraceDoc {
    schema: String,
    #[serde(flatten)]
    trace: Trace,
}

pub fn trace_to_json(trace: &Trace) -> IoResult<String> {
    let mut s = serde_json::to_string_pretty(&TraceDocRef {
        schema: TRACE_SCHEMA,
        trace,
    })?;
    s.push('\n');
    Ok(s)
}

pub fn trace_from_json(text: &str) -> IoResult<Trace> {
    let doc: TraceDoc = serde_json::from_str(text)?;
    if doc.schema != TRACE_SCHEMA {
        return Err(IoError::Schema(doc.schema));
    }
    Ok(doc.trace)
}

pub fn write_trace(trace: &Trace, path: impl AsRef<Path>, format: TraceFormat) -> IoResult<()> {
    let path = path.as_ref();
    let text = match format {
        TraceFormat::Csv => trace_to_csv(trace),
        TraceFormat::Json => trace_to_json(trace)?,
    };
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_trace_json(path: impl AsRef<Path>) -> IoResult<Trace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    trace_from_json(&text)
}

pub fn ring_to_csv(samples: &[RingSample]) -> String {
    let mut out = String::from(RING_CSV_HEADER);
    out.push('\n');
    for s in samples {
        let u = s.unit();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.source_seed,
            s.iterations_to_converge,
            fmt_f64(s.column[0]),
            fmt_f64(s.column[1]),
            fmt_f64(s.column[2]),
            fmt_f64(u[0]),
            fmt_f64(u[1]),
            fmt_f64(u[2]),
        );
    }
    out
}

pub fn write_ring_csv(samples: &[RingSample], path: impl AsRef<Path>) -> IoResult<()> {
    let path = path.as_ref();
    fs::write(path, ring_to_csv(samples)).map_err(io_err(path))
}
