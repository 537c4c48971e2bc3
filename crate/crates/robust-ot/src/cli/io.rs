//! CSV readers and writers. Vectors are single-column headerless files,
//! matrices are headerless rows. Floats are written with 17 significant
//! digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measure::{CostMatrix, DiscreteMeasure};

/// 17 significant digits, which round-trips every f64.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_error(file: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.into(),
        line,
        column,
        message: message.into(),
    }
}

/// Rows of a headerless numeric CSV, parsed from `text`. `file` is only
/// used in messages. Blank lines are skipped.
pub fn parse_rows(file: &str, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(file, line, 1, e.to_string())
        })?;
        let pos = record.position().expect("reader tracks positions");
        let line = pos.line() as usize;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let line_start = pos.byte() as usize;
        let raw_line = &text[line_start..];
        let mut row = Vec::with_capacity(record.len());
        let mut offset = 0;
        for (k, field) in record.iter().enumerate() {
            let column = raw_line[offset..].find(field).map_or(k + 1, |p| offset + p + 1);
            offset = column - 1 + field.len();
            let value: f64 = field
                .parse()
                .map_err(|_| parse_error(file, line, column, format!("expected a number, found {field:?}")))?;
            if !value.is_finite() {
                return Err(parse_error(file, line, column, format!("value {field:?} is not finite")));
            }
            row.push(value);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| parse_error(&path.display().to_string(), 0, 0, e.to_string()))
}

fn rectangular(file: &str, rows: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    if rows.is_empty() {
        return Err(Error::Shape(format!("{file}: no rows")));
    }
    let width = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::Shape(format!(
            "{file}: row {} has {} entries, row 1 has {width}",
            i + 1,
            rows[i].len()
        )));
    }
    Ok(rows)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let file = path.display().to_string();
    let rows = rectangular(&file, parse_rows(&file, &read_text(path)?)?)?;
    if rows[0].len() == 1 {
        return Ok(rows.into_iter().map(|r| r[0]).collect());
    }
    if rows.len() == 1 {
        return Ok(rows.into_iter().next().unwrap_or_default());
    }
    Err(Error::Shape(format!(
        "{file}: expected a single column, found {} columns",
        rows[0].len()
    )))
}

/// A probability or mass vector. Zero entries are smoothed.
pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    let w = read_vector(path)?;
    let file = path.display().to_string();
    if let Some(i) = w.iter().position(|x| *x < 0.0) {
        return Err(Error::InvalidInput(format!("{file}: entry {} is negative", i + 1)));
    }
    if w.iter().any(|x| *x == 0.0) {
        DiscreteMeasure::smoothed(w)
    } else {
        DiscreteMeasure::new(w)
    }
}

pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = path.display().to_string();
    rectangular(&file, parse_rows(&file, &read_text(path)?)?)
}

pub fn read_cost(path: &Path) -> Result<CostMatrix> {
    let rows = read_matrix(path)?;
    if rows.len() != rows[0].len() {
        return Err(Error::Shape(format!(
            "{}: cost matrix is {}x{}, expected square",
            path.display(),
            rows.len(),
            rows[0].len()
        )));
    }
    CostMatrix::from_rows(&rows)
}

/// Hex SHA-256 of the file contents.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn vector_csv(x: &[f64]) -> String {
    let mut s = String::new();
    for v in x {
        s.push_str(&format_float(*v));
        s.push('\n');
    }
    s
}

/// `entries` in row-major order with `cols` columns.
pub fn matrix_csv(entries: &[f64], cols: usize) -> String {
    let mut s = String::new();
    for row in entries.chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, contents)?,
        None => std::io::stdout().lock().write_all(contents.as_bytes())?,
    }
    Ok(())
}
