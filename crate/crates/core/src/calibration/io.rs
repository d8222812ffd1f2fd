//! CSV persistence for calibration logs, matrices and fit reports.

use super::{CalibrationLog, CalibrationMatrix, FitReport, LogRow, AXES};
use crate::physics::Wrench;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

pub const LOG_HEADER: [&str; 7] = ["t_ns", "v1", "v2", "v3", "fz", "mx", "my"];

#[derive(Debug, Serialize, Deserialize)]
struct LogRecord {
    t_ns: u64,
    v1: u16,
    v2: u16,
    v3: u16,
    fz: f64,
    mx: f64,
    my: f64,
}

pub fn read_log<R: Read>(reader: R) -> Result<CalibrationLog<f64>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != LOG_HEADER {
        return Err(CsvError::Format {
            line: 1,
            message: format!("expected header `{}`", LOG_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        let r: LogRecord = rec?;
        rows.push(LogRow {
            timestamp_ns: r.t_ns,
            counts: [r.v1, r.v2, r.v3],
            wrench: Wrench::new(r.fz, r.mx, r.my),
        });
    }
    Ok(CalibrationLog::new(rows))
}

pub fn write_log<W: Write>(writer: W, log: &CalibrationLog<f64>) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in &log.rows {
        wtr.serialize(LogRecord {
            t_ns: r.timestamp_ns,
            v1: r.counts[0],
            v2: r.counts[1],
            v3: r.counts[2],
            fz: r.wrench.fz,
            mx: r.wrench.mx,
            my: r.wrench.my,
        })?;
    }
    if log.rows.is_empty() {
        wtr.write_record(LOG_HEADER)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_log(path: impl AsRef<Path>) -> Result<CalibrationLog<f64>, CsvError> {
    read_log(std::fs::File::open(path)?)
}

pub fn save_log(path: impl AsRef<Path>, log: &CalibrationLog<f64>) -> Result<(), CsvError> {
    write_log(std::fs::File::create(path)?, log)
}

/// Three rows of `k`, then the baseline row. No header.
pub fn write_matrix<W: Write>(writer: W, cal: &CalibrationMatrix<f64>) -> Result<(), CsvError> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in cal.k.iter().chain(std::iter::once(&cal.baseline)) {
        wtr.write_record(row.iter().map(|x| format!("{x:e}")))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(reader: R) -> Result<CalibrationMatrix<f64>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| CsvError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        if vals.len() != 3 || vals.iter().any(|v| !v.is_finite()) {
            return Err(CsvError::Format {
                line: i + 1,
                message: "expected three finite numbers".into(),
            });
        }
        rows.push([vals[0], vals[1], vals[2]]);
    }
    if rows.len() != 4 {
        return Err(CsvError::Format {
            line: rows.len() + 1,
            message: format!("expected 3 matrix rows and 1 baseline row, got {} rows", rows.len()),
        });
    }
    Ok(CalibrationMatrix::new([rows[0], rows[1], rows[2]], rows[3]))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<CalibrationMatrix<f64>, CsvError> {
    read_matrix(std::fs::File::open(path)?)
}

pub fn save_matrix(path: impl AsRef<Path>, cal: &CalibrationMatrix<f64>) -> Result<(), CsvError> {
    write_matrix(std::fs::File::create(path)?, cal)
}

/// Machine-readable report: one row per axis.
pub fn write_report<W: Write>(writer: W, report: &FitReport<f64>) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["axis", "rmse", "r_squared", "residual_max", "condition_number", "rows"])?;
    for (i, (axis, _)) in AXES.iter().enumerate() {
        wtr.write_record([
            axis.to_string(),
            format!("{:e}", report.rmse[i]),
            report.r_squared[i].map(|r| format!("{r}")).unwrap_or_default(),
            format!("{:e}", report.residual_max[i]),
            format!("{:e}", report.condition_number),
            report.rows.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
