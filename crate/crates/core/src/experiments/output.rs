//! CSV output: comma separated, LF line endings, numbers at 12
//! significant digits in `%.12g` style.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{Column, SweepResult};

const SIGNIFICANT: usize = 12;

/// `x` with 12 significant digits and no trailing zeros, in the
/// notation `printf("%.12g")` would choose.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // round first: the exponent must be that of the rounded value
    let sci = format!("{:.*e}", SIGNIFICANT - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= SIGNIFICANT as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIGNIFICANT as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(result: &SweepResult, row: usize, column: Column) -> String {
    let r = &result.rows[row];
    match (column, &r.values) {
        (Column::ParamValue, _) => format_value(r.param_value),
        (Column::Status, Ok(_)) => "ok".into(),
        (Column::Status, Err(e)) => e.clone(),
        (c, Ok(v)) => v.get(c).map(format_value).unwrap_or_default(),
        (_, Err(_)) => String::new(),
    }
}

/// Writes the table to `out`.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(result.columns.iter().map(|c| c.name()))?;
    for i in 0..result.rows.len() {
        w.write_record(result.columns.iter().map(|&c| cell(result, i, c)))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the table to `path`. An empty sweep gives a header-only file.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(result, BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads an emitted file back as header and string records.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let wrap = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::ReaderBuilder::new().from_path(path).map_err(wrap)?;
    let header = r
        .headers()
        .map_err(wrap)?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for record in r.records() {
        rows.push(record.map_err(wrap)?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}
