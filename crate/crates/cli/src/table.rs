//! Minimal CSV tables with deterministic float formatting.
//!
//! Floats are printed with Rust's shortest round-trip formatting, so the
//! written text parses back to the exact same bits and identical runs
//! produce identical bytes. Cells are quoted only when they contain a
//! comma, quote, or newline.

use std::path::Path;

use crate::{input_error, CliError};

/// Shortest round-trip decimal for a float; special values by name.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v}")
    }
}

pub fn fmt_bool(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

fn parse_f64(cell: &str) -> Option<f64> {
    match cell {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => cell.parse().ok(),
    }
}

/// An in-memory CSV table: named columns, string cells.
#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        assert_eq!(
            cells.len(),
            self.columns.len(),
            "row width must match the header"
        );
        self.rows.push(cells);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Parses a whole column as floats; empty cells become NaN so sparse
    /// rows (recorded failures) survive a round trip.
    pub fn f64_column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| input_error(format!("missing column \"{name}\"")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let cell = &row[idx];
                if cell.is_empty() {
                    Ok(f64::NAN)
                } else {
                    parse_f64(cell).ok_or_else(|| {
                        input_error(format!(
                            "column \"{name}\" row {r}: cannot parse \"{cell}\" as a number"
                        ))
                    })
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        write_record(&mut out, &self.columns);
        for row in &self.rows {
            write_record(&mut out, row);
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_csv())
            .map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
        let mut records = parse_csv(&text)
            .map_err(|e| input_error(format!("{}: {e}", path.display())))?
            .into_iter();
        let columns = records
            .next()
            .ok_or_else(|| input_error(format!("{}: empty file", path.display())))?;
        let mut table = Table {
            columns,
            rows: Vec::new(),
        };
        for (k, row) in records.enumerate() {
            if row.len() != table.columns.len() {
                return Err(input_error(format!(
                    "{}: row {} has {} cells, header has {}",
                    path.display(),
                    k,
                    row.len(),
                    table.columns.len()
                )));
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}

fn needs_quoting(cell: &str) -> bool {
    cell.contains(',') || cell.contains('"') || cell.contains('\n') || cell.contains('\r')
}

fn write_record(out: &mut String, cells: &[String]) {
    for (k, cell) in cells.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        if needs_quoting(cell) {
            out.push('"');
            for ch in cell.chars() {
                if ch == '"' {
                    out.push('"');
                }
                out.push(ch);
            }
            out.push('"');
        } else {
            out.push_str(cell);
        }
    }
    out.push('\n');
}

fn parse_csv(text: &str) -> Result<Vec<Vec<String>>, String> {
    let mut records = Vec::new();
    let mut record = Vec::new();
    let mut cell = String::new();
    let mut quoted = false;
    let mut chars = text.chars().peekable();
    while let Some(ch) = chars.next() {
        if quoted {
            match ch {
                '"' => {
                    if chars.peek() == Some(&'"') {
                        chars.next();
                        cell.push('"');
                    } else {
                        quoted = false;
                    }
                }
                _ => cell.push(ch),
            }
        } else {
            match ch {
                '"' => {
                    if cell.is_empty() {
                        quoted = true;
                    } else {
                        return Err("stray quote inside unquoted cell".to_string());
                    }
                }
                ',' => {
                    record.push(std::mem::take(&mut cell));
                }
                '\r' => {}
                '\n' => {
                    record.push(std::mem::take(&mut cell));
                    records.push(std::mem::take(&mut record));
                }
                _ => cell.push(ch),
            }
        }
    }
    if quoted {
        return Err("unterminated quoted cell".to_string());
    }
    if !cell.is_empty() || !record.is_empty() {
        record.push(cell);
        records.push(record);
    }
    Ok(records)
}
