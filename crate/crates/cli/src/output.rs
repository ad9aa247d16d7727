//! Result tables and their CSV / JSON renderings.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::CliError;

/// Provenance written at the top of every output.
#[derive(Debug, Clone)]
pub struct Header {
    pub command: String,
    pub config_hash: String,
    pub grid: String,
}

/// One output file: metadata, a flat table for CSV and structured records
/// for JSON (usually the same rows).
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub meta: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub records: Vec<Value>,
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Value>) {
        self.meta.push((key.to_string(), value.into()));
    }

    /// Adds a row; the JSON record maps column names to the same cells.
    pub fn push(&mut self, cells: Vec<Value>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells.iter().map(cell_text).collect());
        let rec: Map<String, Value> = self.columns.iter().cloned().zip(cells).collect();
        self.records.push(Value::Object(rec));
    }

    /// Adds a row whose JSON record is given separately.
    pub fn push_with_record(&mut self, cells: Vec<Value>, record: Value) {
        self.rows.push(cells.iter().map(cell_text).collect());
        self.records.push(record);
    }

    pub fn write(&self, header: &Header, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
        match format {
            Format::Csv => self.write_csv(header, out),
            Format::Json => self.write_json(header, out),
        }
    }

    fn write_csv(&self, header: &Header, out: &mut dyn Write) -> Result<(), CliError> {
        let mut head = String::new();
        head.push_str(&format!("# magspec {}\n", env!("CARGO_PKG_VERSION")));
        head.push_str(&format!("# command: {}\n", header.command));
        head.push_str(&format!("# config-hash: {}\n", header.config_hash));
        head.push_str(&format!("# grid: {}\n", header.grid));
        for (k, v) in &self.meta {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            head.push_str(&format!("# {k}: {v}\n"));
        }
        out.write_all(head.as_bytes())?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_json(&self, header: &Header, out: &mut dyn Write) -> Result<(), CliError> {
        let meta: Map<String, Value> = self.meta.iter().cloned().collect();
        let doc = json!({
            "header": {
                "tool": "magspec",
                "version": env!("CARGO_PKG_VERSION"),
                "command": header.command,
                "config_hash": header.config_hash,
                "grid": header.grid,
            },
            "meta": meta,
            "records": self.records,
        });
        serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| CliError::Io(e.to_string()))?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

/// Shortest round-trip decimal for numbers (scientific for very small or
/// large magnitudes), empty for null.
fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:?}"),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

/// JSON number, or null for non-finite values (JSON has no NaN).
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}
