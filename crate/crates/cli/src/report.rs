//! Report emission: CSV tables and JSON documents with every float rounded
//! to 12 significant digits.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;
use crate::scenario::Format;

const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to 12 significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Shortest text that reads back as `round_sig(x)`.
pub fn fmt_sig(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    if !r.is_finite() {
        return r.to_string();
    }
    let mag = r.abs();
    if (1e-5..1e15).contains(&mag) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| CliError::Io(format!("cannot encode report: {e}")))?;
    round_value(&mut v);
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// One CSV cell.
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => fmt_sig(*x),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Float)
    }
}

pub struct Table {
    header: &'static str,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &'static str) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::from(self.header);
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// A finished report in both encodings.
pub struct Report {
    pub table: Table,
    pub json: String,
}

impl Report {
    pub fn new<T: Serialize>(table: Table, value: &T) -> Result<Self, CliError> {
        Ok(Self {
            table,
            json: to_json(value)?,
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.table.render(),
            Format::Json => self.json.clone(),
        }
    }
}

/// Writes the report to `path`, or to stdout when no path is given.
pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let text = report.render(format);
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_sig(0.1 + 0.2), "0.3");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(2.0 / 3.0 * 1e-9), "6.66666666667e-10");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(112.0), "112");
        assert_eq!(fmt_sig(123456789012345.0), "123456789012000");
    }

    #[test]
    fn json_round_trip_keeps_twelve_digits() {
        let values = vec![1.0 / 7.0, 0.264241117657115, 3e-17, 1.0];
        let text = to_json(&values).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(round_sig(*a), *b);
            assert!((a - b).abs() <= a.abs() * 1e-11);
        }
    }

    #[test]
    fn header_only_table() {
        let t = Table::new("C,x");
        assert_eq!(t.render(), "C,x\n");
    }

    #[test]
    fn missing_cells_are_empty() {
        let mut t = Table::new("a,b,c");
        t.push(vec![Cell::Int(3), Cell::Missing, Cell::Float(0.5)]);
        assert_eq!(t.render(), "a,b,c\n3,,0.5\n");
    }
}
