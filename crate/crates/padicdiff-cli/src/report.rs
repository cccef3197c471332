//! Report tables and their JSON / CSV encodings.

use num_rational::Rational64;
use padicdiff::padic_core::Valuation;
use serde_json::{Map, Value};

use crate::config::Format;
use crate::CliError;

/// One subcommand's output: a table plus a verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub command: String,
    pub params: Map<String, Value>,
    /// what the table verifies, in words
    pub paper_ref: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub failures: Vec<String>,
    pub runtime_ms: u64,
}

impl Report {
    pub fn new(command: &str, paper_ref: &str, columns: &[&str]) -> Self {
        Report {
            command: command.into(),
            params: Map::new(),
            paper_ref: paper_ref.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            failures: Vec::new(),
            runtime_ms: 0,
        }
    }

    pub fn param(&mut self, key: &str, v: impl Into<Value>) {
        self.params.insert(key.into(), v.into());
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len(), "{}: row width", self.command);
        self.rows.push(row);
    }

    pub fn fail(&mut self, reason: impl Into<String>) {
        self.failures.push(reason.into());
    }

    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn verdict(&self) -> String {
        match self.failures.first() {
            None => "pass".into(),
            Some(f) if self.failures.len() == 1 => format!("fail: {f}"),
            Some(f) => format!("fail: {f} (and {} more)", self.failures.len() - 1),
        }
    }

    /// Column index by name.
    pub fn col(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
            .collect();
        let mut o = Map::new();
        o.insert("command".into(), self.command.clone().into());
        o.insert("params".into(), Value::Object(self.params.clone()));
        o.insert("paper_ref".into(), self.paper_ref.clone().into());
        o.insert("rows".into(), Value::Array(rows));
        o.insert("verdict".into(), self.verdict().into());
        o.insert("runtime_ms".into(), self.runtime_ms.into());
        Value::Object(o)
    }

    pub fn emit(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&self.to_json()).map_err(|e| CliError::Io(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns).map_err(|e| CliError::Io(e.to_string()))?;
                for r in &self.rows {
                    w.write_record(r.iter().map(cell_text)).map_err(|e| CliError::Io(e.to_string()))?;
                }
                w.into_inner().map_err(|e| CliError::Io(e.to_string()))
            }
        }
    }
}

/// Text of a cell as written to CSV.
pub fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A valuation as an exact rational string ("-3/2", "4", "inf").
pub fn val(v: Valuation) -> Value {
    Value::String(v.to_string())
}

pub fn rat(r: Rational64) -> Value {
    Value::String(r.to_string())
}

pub fn opt<T: Into<Value>>(v: Option<T>) -> Value {
    v.map(Into::into).unwrap_or(Value::Null)
}
