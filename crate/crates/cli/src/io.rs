//! CSV and JSON input/output.
//!
//! All floating-point output goes through [`fmt_f64`] (17 significant
//! digits), so reruns with identical configuration produce byte-identical
//! files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use qbounce_core::basis::Sigma;
use qbounce_core::experiment::MeasurementRecord;

use crate::{usage_err, CliResult};

pub const RECORD_HEADER: &str = "strength_m_per_s,omega_rad_per_s,transmission,error";

/// 17 significant digits; enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Sigma as a CSV/JSON-friendly token: the float or `inf`.
pub fn fmt_sigma(sigma: Sigma) -> String {
    match sigma {
        Sigma::Finite(s) => fmt_f64(s),
        Sigma::Infinite => "inf".into(),
    }
}

pub fn sigma_json(sigma: Sigma) -> serde_json::Value {
    match sigma {
        Sigma::Finite(s) => serde_json::Value::from(s),
        Sigma::Infinite => serde_json::Value::from("inf"),
    }
}

/// Opens an output file for buffered writing.
pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    let file = File::create(path)
        .with_context(|| format!("creating output file {}", path.display()))
        .map_err(usage_err)?;
    Ok(BufWriter::new(file))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(usage_err)?;
    out.write_all(b"\n").map_err(|e| usage_err(anyhow!(e)))?;
    Ok(())
}

/// Reads and validates a measurement CSV.
///
/// The header must be exactly `strength_m_per_s,omega_rad_per_s,
/// transmission,error`; malformed rows are reported with their line number.
/// Duplicate `(strength, omega)` pairs are allowed (repeated measurements).
pub fn read_records(path: &Path) -> CliResult<Vec<MeasurementRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening data file {}", path.display()))
        .map_err(usage_err)?;

    let headers = reader.headers().map_err(|e| usage_err(anyhow!(e)))?.clone();
    let expected: Vec<&str> = RECORD_HEADER.split(',').collect();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(usage_err(anyhow!(
            "unexpected header {:?}; expected {RECORD_HEADER}",
            got.join(",")
        )));
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| usage_err(anyhow!(e)))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 4 {
            return Err(usage_err(anyhow!(
                "line {line}: expected 4 fields, got {}",
                row.len()
            )));
        }
        let mut values = [0.0f64; 4];
        for (i, field) in row.iter().enumerate() {
            values[i] = field
                .parse()
                .with_context(|| format!("line {line}: invalid number '{field}'"))
                .map_err(usage_err)?;
        }
        let record = MeasurementRecord::new(values[0], values[1], values[2], values[3])
            .with_context(|| format!("line {line}"))
            .map_err(usage_err)?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the input schema.
pub fn write_records(path: &Path, records: &[MeasurementRecord]) -> CliResult<()> {
    let mut out = create(path)?;
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "{RECORD_HEADER}")?;
        for r in records {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(r.strength),
                fmt_f64(r.omega),
                fmt_f64(r.transmission),
                fmt_f64(r.error)
            )?;
        }
        Ok(())
    };
    write(&mut out)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(usage_err)
}
