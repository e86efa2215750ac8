//! Homogeneous result tables and their CSV / JSON encodings.
//!
//! Floats are always written in scientific notation with 17 significant
//! digits, so every finite value survives a write/parse round trip exactly
//! and identical tables serialise to identical bytes.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value as Json;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidInput(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<Option<f64>> for Value {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Value::Missing, Value::Float)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

/// 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl Value {
    fn csv_cell(&self) -> String {
        match self {
            Value::Float(x) => format_float(*x),
            Value::Int(i) => i.to_string(),
            Value::Text(s) => s.clone(),
            Value::Missing => String::new(),
        }
    }

    fn json_literal(&self) -> Result<String> {
        Ok(match self {
            Value::Float(x) if x.is_finite() => format_float(*x),
            Value::Float(_) | Value::Missing => "null".into(),
            Value::Int(i) => i.to_string(),
            Value::Text(s) => serde_json::to_string(s)?,
        })
    }

    fn from_csv_cell(cell: &str) -> Value {
        if cell.is_empty() {
            return Value::Missing;
        }
        if let Ok(i) = cell.parse::<i64>() {
            return Value::Int(i);
        }
        let looks_float = cell.contains(['e', 'E']) || matches!(cell, "NaN" | "inf" | "-inf");
        match cell.parse::<f64>() {
            Ok(x) if looks_float => Value::Float(x),
            _ => Value::Text(cell.to_string()),
        }
    }

    fn from_json(v: &Json) -> Result<Value> {
        Ok(match v {
            Json::Null => Value::Missing,
            Json::Number(n) if n.is_i64() && !n.to_string().contains(['e', 'E', '.']) => Value::Int(n.as_i64().unwrap_or_default()),
            Json::Number(n) => Value::Float(n.as_f64().ok_or_else(|| Error::Table(format!("bad number {n}")))?),
            Json::String(s) => Value::Text(s.clone()),
            other => return Err(Error::Table(format!("unexpected JSON cell {other}"))),
        })
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }
}

/// Ordered metadata block plus rows that all have one cell per column.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { meta: Vec::new(), columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Metadata values are kept on one line.
    pub fn push_meta(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        let value = value.to_string().replace(['\n', '\r'], " ");
        self.meta.push((key.into(), value));
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push_row(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Table(format!("row has {} cells, table has {} columns", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn write(&self, format: Format, path: &Path) -> Result<()> {
        fs::write(path, self.render(format)?)?;
        Ok(())
    }

    pub fn parse(format: Format, bytes: &[u8]) -> Result<Table> {
        match format {
            Format::Csv => Self::from_csv(bytes),
            Format::Json => Self::from_json(bytes),
        }
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.meta {
            out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        }
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(Value::csv_cell))?;
        }
        writer.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    fn from_csv(bytes: &[u8]) -> Result<Table> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Table(e.to_string()))?;
        let mut table = Table::default();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let Some(rest) = line.strip_prefix('#') else { break };
            body_start += line.len();
            let rest = rest.trim_end_matches(['\n', '\r']).trim_start();
            let (k, v) = rest.split_once(": ").or_else(|| rest.split_once(':')).unwrap_or((rest, ""));
            table.meta.push((k.to_string(), v.to_string()));
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(&bytes[body_start..]);
        table.columns = reader.headers()?.iter().map(str::to_string).collect();
        for record in reader.records() {
            let row = record?.iter().map(Value::from_csv_cell).collect();
            table.push_row(row)?;
        }
        Ok(table)
    }

    fn to_json(&self) -> Result<Vec<u8>> {
        let mut s = String::from("{\n  \"meta\": {");
        for (i, (k, v)) in self.meta.iter().enumerate() {
            let sep = if i == 0 { "\n" } else { ",\n" };
            s.push_str(&format!("{sep}    {}: {}", serde_json::to_string(k)?, serde_json::to_string(v)?));
        }
        s.push_str(if self.meta.is_empty() { "},\n" } else { "\n  },\n" });
        let cols: Vec<String> = self.columns.iter().map(serde_json::to_string).collect::<std::result::Result<_, _>>()?;
        s.push_str(&format!("  \"columns\": [{}],\n  \"rows\": [", cols.join(", ")));
        for (i, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = cols
                .iter()
                .zip(row)
                .map(|(c, v)| Ok(format!("{c}: {}", v.json_literal()?)))
                .collect::<Result<_>>()?;
            let sep = if i == 0 { "\n" } else { ",\n" };
            s.push_str(&format!("{sep}    {{{}}}", cells.join(", ")));
        }
        s.push_str(if self.rows.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
        Ok(s.into_bytes())
    }

    fn from_json(bytes: &[u8]) -> Result<Table> {
        let doc: Json = serde_json::from_slice(bytes)?;
        let mut table = Table::default();
        if let Some(meta) = doc.get("meta").and_then(Json::as_object) {
            for (k, v) in meta {
                let v = v.as_str().ok_or_else(|| Error::Table(format!("meta value for {k} is not a string")))?;
                table.meta.push((k.clone(), v.to_string()));
            }
        }
        let columns = doc.get("columns").and_then(Json::as_array).ok_or_else(|| Error::Table("missing columns".into()))?;
        table.columns = columns
            .iter()
            .map(|c| c.as_str().map(str::to_string).ok_or_else(|| Error::Table("column name is not a string".into())))
            .collect::<Result<_>>()?;
        let rows = doc.get("rows").and_then(Json::as_array).ok_or_else(|| Error::Table("missing rows".into()))?;
        for row in rows {
            let obj = row.as_object().ok_or_else(|| Error::Table("row is not an object".into()))?;
            let cells = table
                .columns
                .iter()
                .map(|c| obj.get(c).map_or(Ok(Value::Missing), Value::from_json))
                .collect::<Result<Vec<_>>>()?;
            table.push_row(cells)?;
        }
        Ok(table)
    }
}
