//! Row output as CSV or a versioned JSON document.

use std::io::Write;

use anyhow::Result;
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // shortest round-trip representation, independent of locale
            Cell::Num(v) => format!("{v:?}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(v.to_string()),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
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

/// A command's result: rows, run metadata and an optional summary.
#[derive(Debug, Clone)]
pub struct Table {
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Map<String, Value>,
    pub summary: Map<String, Value>,
}

impl Table {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Table {
            command: command.to_string(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            metadata: Map::new(),
            summary: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, v: impl Serialize) {
        self.metadata.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn summarize(&mut self, key: &str, v: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    /// False if any `converged` or `pass` column holds `false`.
    pub fn all_ok(&self) -> bool {
        let idx: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.as_str() == "converged" || c.as_str() == "pass")
            .map(|(i, _)| i)
            .collect();
        self.rows.iter().all(|r| idx.iter().all(|&i| r[i] != Cell::Bool(false)))
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::csv))?;
                }
                w.flush()?;
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
                    .collect();
                let mut doc = Map::new();
                doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
                doc.insert("command".into(), json!(self.command));
                doc.insert("metadata".into(), Value::Object(self.metadata.clone()));
                if !self.summary.is_empty() {
                    doc.insert("summary".into(), Value::Object(self.summary.clone()));
                }
                doc.insert("columns".into(), json!(self.columns));
                doc.insert("rows".into(), Value::Array(rows));
                serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
                writeln!(out)?;
            }
        }
        Ok(())
    }
}
