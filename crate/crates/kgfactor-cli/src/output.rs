//! CSV and JSON artifact writers (and the matching readers used by the
//! round-trip tests).
//!
//! Series files: header `step_index,t_or_z,<name>,...`, one row per recorded
//! step. Field files: header `grid_index,coordinate,re,im`, one row per grid
//! point. Every number is written with 17 significant digits, which
//! round-trips an f64 exactly, so identical runs produce identical bytes.
//! The JSON sidecar carries the config echo, versions, and wall time (the
//! only run-dependent artifact).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use kgfactor_core::field::ComplexField;
use serde_json::Value;

use crate::error::HarnessError;

/// 17 significant digits: enough to reproduce the exact bit pattern on read.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub step: usize,
    pub coord: f64,
    pub values: Vec<f64>,
}

pub fn write_series_csv(
    path: &Path,
    names: &[&str],
    rows: &[SeriesRow],
) -> Result<(), HarnessError> {
    let mut out = String::new();
    out.push_str("step_index,t_or_z");
    for name in names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.step.to_string());
        out.push(',');
        out.push_str(&fmt_f64(row.coord));
        for v in &row.values {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_series_csv(path: &Path) -> Result<(Vec<String>, Vec<SeriesRow>), HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Config(format!("{}: empty series file", path.display())))?;
    let mut cols = header.split(',');
    let bad = |what: &str| {
        HarnessError::Config(format!("{}: malformed series file ({what})", path.display()))
    };
    if cols.next() != Some("step_index") || cols.next() != Some("t_or_z") {
        return Err(bad("header must start with step_index,t_or_z"));
    }
    let names: Vec<String> = cols.map(str::to_string).collect();
    let mut rows = Vec::new();
    for line in lines {
        let mut parts = line.split(',');
        let step = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("unparseable step index"))?;
        let coord = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("unparseable coordinate"))?;
        let values: Vec<f64> = parts
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("unparseable series value"))?;
        if values.len() != names.len() {
            return Err(bad("row width does not match header"));
        }
        rows.push(SeriesRow { step, coord, values });
    }
    Ok((names, rows))
}

pub fn write_field_csv(path: &Path, field: &ComplexField) -> Result<(), HarnessError> {
    let mut out = String::from("grid_index,coordinate,re,im\n");
    let grid = field.grid();
    for (i, v) in field.values().iter().enumerate() {
        out.push_str(&i.to_string());
        out.push(',');
        out.push_str(&fmt_f64(grid.coord(i)));
        out.push(',');
        out.push_str(&fmt_f64(v.re));
        out.push(',');
        out.push_str(&fmt_f64(v.im));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Rows of a field file: (grid_index, coordinate, re, im).
pub fn read_field_csv(path: &Path) -> Result<Vec<(usize, f64, f64, f64)>, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let bad = |what: &str| {
        HarnessError::Config(format!("{}: malformed field file ({what})", path.display()))
    };
    if lines.next() != Some("grid_index,coordinate,re,im") {
        return Err(bad("unexpected header"));
    }
    let mut rows = Vec::new();
    for line in lines {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(bad("row does not have 4 columns"));
        }
        let idx = parts[0].parse().map_err(|_| bad("unparseable grid index"))?;
        let coord = parts[1].parse().map_err(|_| bad("unparseable coordinate"))?;
        let re = parts[2].parse().map_err(|_| bad("unparseable re"))?;
        let im = parts[3].parse().map_err(|_| bad("unparseable im"))?;
        rows.push((idx, coord, re, im));
    }
    Ok(rows)
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::Config(format!("cannot serialize metadata: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Generic two-column table (scan outputs, dispersion tables, ...).
pub fn write_table_csv(
    path: &Path,
    names: &[&str],
    rows: &[Vec<f64>],
) -> Result<(), HarnessError> {
    let mut out = String::new();
    out.push_str(&names.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn ensure_out_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Write via a temp file + rename so partially-written artifacts never
/// appear under the target name.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
