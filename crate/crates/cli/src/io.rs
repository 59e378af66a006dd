//! CSV reading and writing.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::CliError;

/// A numeric table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn open(path: &Path) -> Result<Box<dyn Read>, CliError> {
    if path == Path::new("-") {
        return Ok(Box::new(io::stdin()));
    }
    let file = File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    Ok(Box::new(file))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(text)
}

/// Reads a comma-separated table; every field after the header must be a
/// finite number. Line numbers in errors count the header as line 1.
pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let bad = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    let header: Vec<String> = reader.headers().map_err(bad)?.iter().map(String::from).collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(CliError::Input(format!("{}: missing header row", path.display())));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(bad)?;
        let line = i + 2;
        let row = record
            .iter()
            .zip(&header)
            .map(|(field, name)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::Input(format!(
                            "{} line {line}, column {name}: '{field}' is not a finite number",
                            path.display()
                        ))
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Writes `table` with the shortest decimal form that reads back to the same
/// value, so zeros come out as `0`.
pub fn write_table(table: &Table, out: &mut dyn Write) -> io::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(&table.header)?;
    for row in &table.rows {
        writer.write_record(row.iter().map(|&v| format!("{}", if v == 0.0 { 0.0 } else { v })))?;
    }
    writer.flush()
}
