//! Observation stream formats.
//!
//! # JSON lines
//!
//! One object per line with fields `x`, `y` and `z` (an array with one entry
//! per adjustment variable, in schema order):
//!
//! ```text
//! {"format_version": 1, "x": "1", "y": "0", "z": ["1"]}
//! ```
//!
//! Values may be strings or non-negative integers. Either form is first
//! looked up as a domain label; an integer that is not a label is taken as a
//! value index. `format_version` is optional and must be 1 when present.
//! Other fields are ignored, and blank lines are skipped.
//!
//! # CSV
//!
//! A header row is required. A [`ColumnMap`] names the treatment, outcome and
//! adjustment columns; by default they are the schema's variable names.

use std::io::{BufRead, Read, Write};

use serde_json::Value;
use thiserror::Error;

use crate::counts::{Observation, Schema, Variable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("read error: {0}")]
    Read(String),
    #[error("invalid column map `{0}`; expected x=<col>,y=<col>,z=<col>[+<col>...]")]
    ColumnMap(String),
    #[error("column `{0}` is not in the CSV header")]
    MissingColumn(String),
}

fn resolve(var: &Variable, v: &Value) -> Result<usize, String> {
    match v {
        Value::String(s) => var.value_index(s).map_err(|e| e.to_string()),
        Value::Number(n) => {
            let text = n.to_string();
            if let Ok(i) = var.value_index(&text) {
                return Ok(i);
            }
            match n.as_u64() {
                Some(i) if (i as usize) < var.size() => Ok(i as usize),
                _ => Err(format!("value {text} is neither a label nor an index of `{}`", var.name)),
            }
        }
        other => Err(format!("`{}` must be a string or an integer, got {other}", var.name)),
    }
}

/// Parses one JSON-lines record; `Ok(None)` for a blank line.
pub fn parse_record(line: &str, schema: &Schema) -> Result<Option<Observation>, String> {
    if line.trim().is_empty() {
        return Ok(None);
    }
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("record must be a JSON object")?;
    if let Some(v) = obj.get("format_version") {
        if v.as_u64() != Some(u64::from(crate::FORMAT_VERSION)) {
            return Err(format!("unsupported format_version {v}"));
        }
    }
    let field = |k: &str| obj.get(k).ok_or_else(|| format!("missing field `{k}`"));
    let x = resolve(&schema.treatment, field("x")?)?;
    let y = resolve(&schema.outcome, field("y")?)?;
    let z = match field("z")? {
        Value::Array(items) => items,
        _ => return Err("`z` must be an array".into()),
    };
    if z.len() != schema.adjustment.len() {
        return Err(format!(
            "`z` has {} entries, expected {}",
            z.len(),
            schema.adjustment.len()
        ));
    }
    let z = z
        .iter()
        .zip(&schema.adjustment)
        .map(|(v, var)| resolve(var, v))
        .collect::<Result<_, _>>()?;
    Ok(Some(Observation::new(x, y, z)))
}

/// Streaming JSON-lines reader; errors carry 1-based line numbers.
pub struct JsonlReader<'s, R> {
    lines: std::io::Lines<R>,
    schema: &'s Schema,
    line: usize,
}

impl<'s, R: BufRead> JsonlReader<'s, R> {
    pub fn new(reader: R, schema: &'s Schema) -> Self {
        Self {
            lines: reader.lines(),
            schema,
            line: 0,
        }
    }
}

impl<R: BufRead> Iterator for JsonlReader<'_, R> {
    type Item = Result<Observation, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(IoError::Read(e.to_string()))),
            };
            self.line += 1;
            match parse_record(&text, self.schema) {
                Ok(Some(obs)) => return Some(Ok(obs)),
                Ok(None) => continue,
                Err(message) => {
                    return Some(Err(IoError::Parse {
                        line: self.line,
                        message,
                    }))
                }
            }
        }
    }
}

/// Writes one record with labels as strings.
pub fn write_record<W: Write>(out: &mut W, schema: &Schema, obs: &Observation) -> std::io::Result<()> {
    let record = serde_json::json!({
        "format_version": crate::FORMAT_VERSION,
        "x": schema.treatment.domain[obs.x],
        "y": schema.outcome.domain[obs.y],
        "z": obs.z.iter().zip(&schema.adjustment).map(|(&v, var)| var.domain[v].as_str()).collect::<Vec<_>>(),
    });
    writeln!(out, "{record}")
}

/// Which CSV columns hold the treatment, outcome and adjustment values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub x: String,
    pub y: String,
    pub z: Vec<String>,
}

impl ColumnMap {
    pub fn from_schema(schema: &Schema) -> Self {
        Self {
            x: schema.treatment.name.clone(),
            y: schema.outcome.name.clone(),
            z: schema.adjustment.iter().map(|v| v.name.clone()).collect(),
        }
    }

    /// Parses `x=<col>,y=<col>,z=<col>+<col>`.
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let bad = || IoError::ColumnMap(text.to_string());
        let (mut x, mut y, mut z) = (None, None, None);
        for part in text.split(',') {
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            let v = v.trim();
            if v.is_empty() {
                return Err(bad());
            }
            match k.trim() {
                "x" => x = Some(v.to_string()),
                "y" => y = Some(v.to_string()),
                "z" => z = Some(v.split('+').map(|s| s.trim().to_string()).collect()),
                _ => return Err(bad()),
            }
        }
        Ok(Self {
            x: x.ok_or_else(bad)?,
            y: y.ok_or_else(bad)?,
            z: z.ok_or_else(bad)?,
        })
    }
}

/// Reads a headed CSV file. Cells are matched as labels, falling back to indices.
pub fn read_csv<R: Read>(reader: R, schema: &Schema, columns: &ColumnMap) -> Result<Vec<Observation>, IoError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| IoError::Read(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IoError::MissingColumn(name.to_string()))
    };
    if columns.z.len() != schema.adjustment.len() {
        return Err(IoError::ColumnMap(format!(
            "{} adjustment columns for {} adjustment variables",
            columns.z.len(),
            schema.adjustment.len()
        )));
    }
    let xc = find(&columns.x)?;
    let yc = find(&columns.y)?;
    let zc = columns.z.iter().map(|c| find(c)).collect::<Result<Vec<_>, _>>()?;
    let cell = |var: &Variable, text: &str| -> Result<usize, String> {
        let text = text.trim();
        var.value_index(text).or_else(|_| match text.parse::<usize>() {
            Ok(i) if i < var.size() => Ok(i),
            _ => Err(format!("`{text}` is neither a label nor an index of `{}`", var.name)),
        })
    };
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        // Header is line 1.
        let line = i + 2;
        let row = row.map_err(|e| IoError::Parse {
            line,
            message: e.to_string(),
        })?;
        let get = |c: usize| row.get(c).unwrap_or("");
        let parsed = (|| {
            let x = cell(&schema.treatment, get(xc))?;
            let y = cell(&schema.outcome, get(yc))?;
            let z = zc
                .iter()
                .zip(&schema.adjustment)
                .map(|(&c, var)| cell(var, get(c)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok::<_, String>(Observation::new(x, y, z))
        })();
        out.push(parsed.map_err(|message| IoError::Parse { line, message })?);
    }
    Ok(out)
}
