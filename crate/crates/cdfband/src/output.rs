//! Tabular results as versioned CSV or JSON.
//!
//! Both formats print floats with Rust's shortest round-trip representation,
//! so parsing either one recovers identical numbers.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::{Format, CSV_SCHEMA_VERSION};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if x.is_finite() => format!("{x:?}"),
            Cell::Float(_) => String::new(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
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

/// Result table with a few summary values.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(&'static str, Cell)>,
}

impl Table {
    pub fn new(command: &str, columns: &[&'static str]) -> Self {
        Table { command: command.to_string(), columns: columns.to_vec(), rows: Vec::new(), summary: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV with two header comment lines (schema, config echo), one per
    /// summary entry, then the column header and rows.
    pub fn to_csv(&self, echo: &[(String, String)]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# cdfband schema={CSV_SCHEMA_VERSION} command={}", self.command);
        let cfg: Vec<String> = echo.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "# config {}", cfg.join(" "));
        for (k, v) in &self.summary {
            let _ = writeln!(s, "# summary {k}={}", v.csv());
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn to_json(&self, echo: &[(String, String)]) -> String {
        let config: Map<String, Value> = echo.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let summary: Map<String, Value> =
            self.summary.iter().map(|(k, v)| (k.to_string(), v.json())).collect();
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({
            "schema": CSV_SCHEMA_VERSION,
            "command": self.command,
            "config": config,
            "summary": summary,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format, echo: &[(String, String)]) -> String {
        match format {
            Format::Csv => self.to_csv(echo),
            Format::Json => self.to_json(echo),
        }
    }
}

/// Writes `text` to `out` (`-` for stdout). Files are written to a sibling
/// temporary path and renamed into place, so a failed run leaves nothing
/// behind.
pub fn write_output(out: &str, text: &str) -> Result<()> {
    if out == "-" {
        let mut stdout = std::io::stdout().lock();
        return stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source });
    }
    let path = Path::new(out);
    let tmp = path.with_file_name(format!(
        ".{}.partial",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    let io = |source| CliError::Io { path: out.to_string(), source };
    let result = std::fs::write(&tmp, text).and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(io(e));
    }
    Ok(())
}
