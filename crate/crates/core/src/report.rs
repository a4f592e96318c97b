//! JSON report envelope and number formatting shared by all subcommands.
//!
//! Reports carry no timestamps or host data: the same inputs and flags give
//! byte-identical output.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Number, Value};

pub const SCHEMA_VERSION: u32 = 1;
pub const SIGNIFICANT_DIGITS: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub results: Value,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl EvalReport {
    pub fn new(command: Vec<String>) -> Self {
        EvalReport {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo {
                name: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            command,
            inputs: Vec::new(),
            results: Value::Object(Map::new()),
            warnings: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> std::io::Result<()> {
        let bytes = fs::metadata(path)?.len();
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            bytes,
        });
        Ok(())
    }

    /// Stores `value` under `key` in the results object.
    pub fn set_result<T: Serialize>(&mut self, key: &str, value: &T) -> serde_json::Result<()> {
        let value = serde_json::to_value(value)?;
        if let Value::Object(map) = &mut self.results {
            map.insert(key.to_string(), value);
        }
        Ok(())
    }

    pub fn warn(&mut self, warning: impl Into<String>) {
        self.warnings.push(warning.into());
    }

    pub fn note(&mut self, note: impl Into<String>) {
        let note = note.into();
        if !self.notes.contains(&note) {
            self.notes.push(note);
        }
    }

    /// Pretty JSON with a trailing newline. Floats are rounded to
    /// [`SIGNIFICANT_DIGITS`] unless `full_precision` is set.
    pub fn to_json(&self, full_precision: bool) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if !full_precision {
            round_value(&mut value, SIGNIFICANT_DIGITS);
        }
        let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
        text.push('\n');
        text
    }
}

/// Rounds to `digits` significant decimal digits. Zero and non-finite
/// values pass through.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() || digits == 0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

fn round_value(value: &mut Value, digits: usize) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| Number::from_f64(round_significant(x, digits))) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|v| round_value(v, digits)),
        Value::Object(map) => map.values_mut().for_each(|v| round_value(v, digits)),
        _ => {}
    }
}

/// Formats a float for CSV output.
pub fn format_float(x: f64, full_precision: bool) -> String {
    if full_precision {
        x.to_string()
    } else {
        round_significant(x, SIGNIFICANT_DIGITS).to_string()
    }
}

/// Formats an optional float; `None` becomes an empty cell.
pub fn format_opt(x: Option<f64>, full_precision: bool) -> String {
    x.map(|v| format_float(v, full_precision)).unwrap_or_default()
}
