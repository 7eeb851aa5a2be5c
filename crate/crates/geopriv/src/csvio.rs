//! Minimal CSV helpers for the fixed numeric layouts used by this crate.
//! Inputs here are plain comma-separated numerics with a mandatory header;
//! nothing is ever quoted.

use std::io::BufRead;

use crate::error::{Error, Result};

/// Read a two-column numeric CSV with the given header names.
pub fn read_two_columns<R: BufRead>(
    reader: R,
    col_a: &str,
    col_b: &str,
) -> Result<Vec<(f64, f64)>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty file, expected a header".into()))??;
    let expected = format!("{col_a},{col_b}");
    if header.trim() != expected {
        return Err(Error::Parse(format!(
            "expected header '{expected}', got '{}'",
            header.trim()
        )));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let a = parse_field(parts.next(), col_a, idx + 2)?;
        let b = parse_field(parts.next(), col_b, idx + 2)?;
        if parts.next().is_some() {
            return Err(Error::Parse(format!("line {}: more than two fields", idx + 2)));
        }
        rows.push((a, b));
    }
    Ok(rows)
}

pub fn parse_field(field: Option<&str>, name: &str, line_no: usize) -> Result<f64> {
    let raw = field
        .ok_or_else(|| Error::Parse(format!("line {line_no}: missing field '{name}'")))?
        .trim();
    raw.parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line_no}: field '{name}' is not a number: '{raw}'")))
}
