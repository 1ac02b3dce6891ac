//! Rendering of command results as an aligned table, CSV or JSON.
//!
//! Floats in CSV and JSON are written with 17 significant digits in
//! scientific notation so identical inputs give byte-identical files.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn fmt_table_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e6).contains(&a) || !v.is_finite() {
        format!("{v:.6}")
    } else {
        format!("{v:.6e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => fmt_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn table(&self) -> String {
        match self {
            Cell::Float(v) => fmt_table_float(*v),
            Cell::Empty => "-".to_string(),
            other => other.csv(),
        }
    }
}

/// One command result. `columns` are (csv key, table label).
#[derive(Debug, Clone)]
pub struct Output {
    pub command: &'static str,
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<Cell>>,
    pub json: Value,
    /// Extra lines shown under the table only.
    pub notes: Vec<String>,
}

impl Output {
    pub fn new(
        command: &'static str,
        columns: &[(&'static str, &'static str)],
        json: impl Serialize,
    ) -> Result<Self, CliError> {
        Ok(Self {
            command,
            columns: columns.to_vec(),
            rows: Vec::new(),
            json: to_json(&json)?,
            notes: Vec::new(),
        })
    }

    pub fn row(mut self, cells: Vec<Cell>) -> Self {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
        self
    }

    pub fn note(mut self, line: impl Into<String>) -> Self {
        self.notes.push(line.into());
        self
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if self.rows.len() == 1 {
            let width = self.columns.iter().map(|c| c.1.chars().count()).max().unwrap_or(0);
            for ((_, label), cell) in self.columns.iter().zip(&self.rows[0]) {
                let pad = width - label.chars().count();
                let _ = writeln!(out, "{label}{} = {}", " ".repeat(pad), cell.table());
            }
        } else {
            let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::table).collect()).collect();
            let widths: Vec<usize> = self
                .columns
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    cells
                        .iter()
                        .map(|r| r[i].chars().count())
                        .chain([c.1.chars().count()])
                        .max()
                        .unwrap()
                })
                .collect();
            let line = |items: Vec<&str>| {
                items
                    .iter()
                    .zip(&widths)
                    .map(|(s, w)| format!("{s:>w$}", w = *w))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            let _ = writeln!(out, "{}", line(self.columns.iter().map(|c| c.1).collect()));
            for r in &cells {
                let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "{n}");
        }
        out
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.0)).map_err(io_err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(&self.json).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Serialize and rewrite every float with 17 significant digits.
pub fn to_json(value: &impl Serialize) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))?;
    fix_floats(&mut v);
    Ok(v)
}

fn fix_floats(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(f) = n.as_f64() {
                *n = serde_json::from_str(&fmt_float(f)).expect("formatted float parses as a JSON number");
            }
        }
        Value::Array(items) => items.iter_mut().for_each(fix_floats),
        Value::Object(map) => map.values_mut().for_each(fix_floats),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(1.0 / 3.0), "3.3333333333333331e-1");
        let v = to_json(&serde_json::json!({"x": 0.1, "n": 3, "inf": f64::INFINITY})).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"inf":null,"n":3,"x":1.0000000000000001e-1}"#);
    }

    #[test]
    fn table_shapes() {
        let o = Output::new("gap", &[("k_star", "k*"), ("lambda_max", "λ_max")], ())
            .unwrap()
            .row(vec![1.0.into(), (1.0f64 / std::f64::consts::E).into()]);
        assert_eq!(o.to_table(), "k*    = 1.000000\nλ_max = 0.367879\n");
        assert_eq!(
            o.to_csv().unwrap(),
            "k_star,lambda_max\n1.0000000000000000e0,3.6787944117144233e-1\n"
        );
    }
}
