//! Trace persistence: CSV for the per-step columns, a JSON sidecar for
//! everything else.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which is
//! enough to reproduce every finite double bit for bit on read-back —
//! writing and re-reading a trace is an identity, and re-running a seeded
//! experiment reproduces files byte for byte.
//!
//! Each `foo.csv` travels with a `foo.json` sidecar carrying the schema
//! version, the run configuration, the cell coordinates (controller,
//! frequency, repetition, seed, time origin), and the computed metrics.
//! The reader rejects sidecars whose schema *major* differs from its own
//! and reports CSV parse failures with 1-based line numbers (the header is
//! line 1).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{schema_major, Config, SCHEMA_MAJOR, SCHEMA_VERSION};
use crate::spine::ControllerKind;
use crate::tilt::BalanceMetrics;

/// The exact CSV header line.
pub const TRACE_HEADER: &str = "t,l_f,l_h,R,f_T,k,fx,fy,hx,hy,dis,theta_roll,theta_pitch";

/// Number of columns in a trace row.
pub const TRACE_COLUMNS: usize = 13;

/// Errors from reading and writing traces.
#[derive(Debug, Error)]
pub enum TraceError {
    /// Filesystem failure, with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// The CSV does not start with the expected header.
    #[error("{path}:1: expected header {TRACE_HEADER:?}, found {found:?}")]
    BadHeader { path: PathBuf, found: String },
    /// A row with the wrong number of columns.
    #[error("{path}:{line}: expected {TRACE_COLUMNS} columns, found {found}")]
    WrongColumnCount {
        path: PathBuf,
        line: usize,
        found: usize,
    },
    /// A column that does not parse as a float.
    #[error("{path}:{line}: column {column} value {token:?} is not a float")]
    BadFloat {
        path: PathBuf,
        line: usize,
        column: &'static str,
        token: String,
    },
    /// A float that parsed but is NaN or infinite.
    #[error("{path}:{line}: column {column} value {token:?} is not finite")]
    NonFinite {
        path: PathBuf,
        line: usize,
        column: &'static str,
        token: String,
    },
    /// Sidecar JSON failure.
    #[error("{path}: invalid sidecar JSON: {source}")]
    BadSidecar {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    /// A sidecar written by an incompatible schema major.
    #[error(
        "{path}: schema version {found:?} is not readable by this build \
         (expected major {SCHEMA_MAJOR})"
    )]
    UnsupportedSchema { path: PathBuf, found: String },
    /// Sidecar row count and CSV row count disagree.
    #[error("{path}: sidecar declares {sidecar} rows but the CSV has {csv}")]
    RowCountMismatch {
        path: PathBuf,
        sidecar: usize,
        csv: usize,
    },
}

/// One simulation step: every column of the CSV, in column order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    /// Time since the trace start, seconds.
    pub t: f64,
    /// Fore stride, meters.
    pub l_f: f64,
    /// Hind stride, meters.
    pub l_h: f64,
    /// Flexion angle, radians.
    pub r: f64,
    /// Controller phase (warped phase for the warped kind), radians.
    pub f_t: f64,
    /// Controller rate multiplier.
    pub k: f64,
    /// Fore foothold x, meters.
    pub fx: f64,
    /// Fore foothold y, meters.
    pub fy: f64,
    /// Hind foothold x, meters.
    pub hx: f64,
    /// Hind foothold y, meters.
    pub hy: f64,
    /// Balance measure, meters.
    pub dis: f64,
    /// Roll proxy, radians.
    pub theta_roll: f64,
    /// Pitch proxy, radians.
    pub theta_pitch: f64,
}

const COLUMN_NAMES: [&str; TRACE_COLUMNS] = [
    "t",
    "l_f",
    "l_h",
    "R",
    "f_T",
    "k",
    "fx",
    "fy",
    "hx",
    "hy",
    "dis",
    "theta_roll",
    "theta_pitch",
];

impl TraceRow {
    fn values(&self) -> [f64; TRACE_COLUMNS] {
        [
            self.t,
            self.l_f,
            self.l_h,
            self.r,
            self.f_t,
            self.k,
            self.fx,
            self.fy,
            self.hx,
            self.hy,
            self.dis,
            self.theta_roll,
            self.theta_pitch,
        ]
    }

    fn from_values(v: [f64; TRACE_COLUMNS]) -> Self {
        Self {
            t: v[0],
            l_f: v[1],
            l_h: v[2],
            r: v[3],
            f_t: v[4],
            k: v[5],
            fx: v[6],
            fy: v[7],
            hx: v[8],
            hy: v[9],
            dis: v[10],
            theta_roll: v[11],
            theta_pitch: v[12],
        }
    }
}

/// Formats a float with enough digits to reproduce its bits on parse.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// One simulation run with everything needed to reproduce and interpret it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    /// The configuration the run used.
    pub config: Config,
    /// Which controller drove the spine.
    pub controller: ControllerKind,
    /// Gait cycle frequency of this cell, Hz.
    pub frequency_hz: f64,
    /// Index of the frequency in the sweep grid.
    pub frequency_index: u32,
    /// Repetition number within the cell.
    pub repetition: u32,
    /// Master seed the cell stream was derived from.
    pub seed: u64,
    /// Random time origin, in steps from the gait-cycle origin.
    pub origin_step: u64,
    /// Per-step trace.
    pub rows: Vec<TraceRow>,
    /// Half-stride metrics of the trace.
    pub metrics: BalanceMetrics,
}

/// Sidecar payload; field order is the file's key order.
#[derive(Serialize, Deserialize)]
struct Sidecar {
    schema_version: String,
    controller: ControllerKind,
    frequency_hz: f64,
    frequency_index: u32,
    repetition: u32,
    seed: u64,
    origin_step: u64,
    rows: usize,
    metrics: BalanceMetrics,
    config: Config,
}

/// The sidecar path belonging to a CSV path (`.csv` → `.json`).
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Canonical trace file name for a sweep cell.
pub fn trace_file_name(kind: ControllerKind, frequency_index: u32, repetition: u32) -> String {
    format!("{kind}_f{frequency_index:02}_rep{repetition:02}.csv")
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> TraceError + '_ {
    move |source| TraceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a record as CSV plus JSON sidecar.
///
/// An empty trace writes a header-only CSV and a normal sidecar. Output is
/// byte-deterministic: the same record always produces the same files.
pub fn write_trace(record: &ExperimentRecord, csv_path: &Path) -> Result<(), TraceError> {
    let mut csv = String::with_capacity(64 * (record.rows.len() + 1));
    csv.push_str(TRACE_HEADER);
    csv.push('\n');
    for row in &record.rows {
        let values = row.values();
        for (i, value) in values.iter().enumerate() {
            if i > 0 {
                csv.push(',');
            }
            // Infallible: writing to a String cannot fail.
            let _ = write!(csv, "{value:.16e}");
        }
        csv.push('\n');
    }
    fs::write(csv_path, csv).map_err(io_error(csv_path))?;

    let sidecar = Sidecar {
        schema_version: SCHEMA_VERSION.to_string(),
        controller: record.controller,
        frequency_hz: record.frequency_hz,
        frequency_index: record.frequency_index,
        repetition: record.repetition,
        seed: record.seed,
        origin_step: record.origin_step,
        rows: record.rows.len(),
        metrics: record.metrics,
        config: record.config.clone(),
    };
    let json_path = sidecar_path(csv_path);
    let mut json =
        serde_json::to_string_pretty(&sidecar).map_err(|source| TraceError::BadSidecar {
            path: json_path.clone(),
            source,
        })?;
    json.push('\n');
    fs::write(&json_path, json).map_err(io_error(&json_path))?;
    Ok(())
}

/// Reads a record back from a CSV path (the sidecar is found next to it).
///
/// Verifies the header, the column counts, float parseability and
/// finiteness (with 1-based line numbers), the sidecar's schema major, and
/// that the sidecar's declared row count matches the CSV.
pub fn read_trace(csv_path: &Path) -> Result<ExperimentRecord, TraceError> {
    let text = fs::read_to_string(csv_path).map_err(io_error(csv_path))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != TRACE_HEADER {
        return Err(TraceError::BadHeader {
            path: csv_path.to_path_buf(),
            found: header.to_string(),
        });
    }

    let mut rows = Vec::new();
    for (index, line) in lines.enumerate() {
        let line_number = index + 2; // header is line 1
        if line.is_empty() {
            continue; // trailing newline
        }
        let mut values = [0.0f64; TRACE_COLUMNS];
        let mut count = 0usize;
        for (i, token) in line.split(',').enumerate() {
            count += 1;
            if i >= TRACE_COLUMNS {
                continue;
            }
            let value: f64 = token.parse().map_err(|_| TraceError::BadFloat {
                path: csv_path.to_path_buf(),
                line: line_number,
                column: COLUMN_NAMES[i],
                token: token.to_string(),
            })?;
            if !value.is_finite() {
                return Err(TraceError::NonFinite {
                    path: csv_path.to_path_buf(),
                    line: line_number,
                    column: COLUMN_NAMES[i],
                    token: token.to_string(),
                });
            }
            values[i] = value;
        }
        if count != TRACE_COLUMNS {
            return Err(TraceError::WrongColumnCount {
                path: csv_path.to_path_buf(),
                line: line_number,
                found: count,
            });
        }
        rows.push(TraceRow::from_values(values));
    }

    let json_path = sidecar_path(csv_path);
    let json = fs::read_to_string(&json_path).map_err(io_error(&json_path))?;
    let sidecar: Sidecar =
        serde_json::from_str(&json).map_err(|source| TraceError::BadSidecar {
            path: json_path.clone(),
            source,
        })?;
    if schema_major(&sidecar.schema_version) != Some(SCHEMA_MAJOR) {
        return Err(TraceError::UnsupportedSchema {
            path: json_path,
            found: sidecar.schema_version,
        });
    }
    if sidecar.rows != rows.len() {
        return Err(TraceError::RowCountMismatch {
            path: json_path,
            sidecar: sidecar.rows,
            csv: rows.len(),
        });
    }

    Ok(ExperimentRecord {
        config: sidecar.config,
        controller: sidecar.controller,
        frequency_hz: sidecar.frequency_hz,
        frequency_index: sidecar.frequency_index,
        repetition: sidecar.repetition,
        seed: sidecar.seed,
        origin_step: sidecar.origin_step,
        rows,
        metrics: sidecar.metrics,
    })
}

/// Writes any serializable value as pretty JSON, newline-terminated.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), TraceError> {
    let mut json =
        serde_json::to_string_pretty(value).map_err(|source| TraceError::BadSidecar {
            path: path.to_path_buf(),
            source,
        })?;
    json.push('\n');
    fs::write(path, json).map_err(io_error(path))
}
