//! Tabular CSV / JSON export and measured-trace ingestion.
//!
//! Numbers are written in their shortest round-trip form, so a value read
//! back parses to the identical `f64`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::dielectric::DielectricModel;
use crate::inversion::MeasuredTrace;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Malformed(String),
}

/// Numeric columns with optional cells; `None` is written as an empty CSV
/// field or JSON `null`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn push_values(&mut self, row: &[f64]) {
        self.push(row.iter().copied().map(Some).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Shortest decimal that parses back to `x`; exponent form outside
/// `[1e-5, 1e15)`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_csv<W: Write>(out: W, table: &Table) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.map(format_number).unwrap_or_default()))?;
    }
    w.flush()?;
    Ok(())
}

/// Metadata common to every JSON document.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Meta {
    pub model: Option<DielectricModel>,
    pub units: crate::units::UnitsMode,
    pub version: &'static str,
    pub command: String,
}

pub fn envelope(meta: &Meta, extra: Map<String, Value>, table: &Table) -> Result<Value, IoError> {
    let mut m = match serde_json::to_value(meta)? {
        Value::Object(m) => m,
        _ => unreachable!("Meta serializes to an object"),
    };
    m.extend(extra);
    let data = table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| (c.clone(), number(*v)))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let mut root = Map::new();
    root.insert("meta".into(), Value::Object(m));
    root.insert("data".into(), Value::Array(data));
    Ok(Value::Object(root))
}

fn number(v: Option<f64>) -> Value {
    v.and_then(serde_json::Number::from_f64)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

pub fn write_json<W: Write>(mut out: W, meta: &Meta, extra: Map<String, Value>, table: &Table) -> Result<(), IoError> {
    let doc = envelope(meta, extra, table)?;
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_table<W: Write>(
    out: W,
    format: Format,
    meta: &Meta,
    extra: Map<String, Value>,
    table: &Table,
) -> Result<(), IoError> {
    match format {
        Format::Csv => write_csv(out, table),
        Format::Json => write_json(out, meta, extra, table),
    }
}

pub fn read_csv_table(text: &str) -> Result<Table, IoError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let columns: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut table = Table::new(columns);
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>()
                        .map(Some)
                        .map_err(|_| IoError::Malformed(format!("record {}: cannot parse {f:?}", line + 1)))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        table.push(row);
    }
    Ok(table)
}

/// Reads a JSON envelope back into its `meta` object and a table whose
/// columns follow the first data row.
pub fn read_json_table(text: &str) -> Result<(Map<String, Value>, Table), IoError> {
    let doc: Value = serde_json::from_str(text)?;
    let meta = match doc.get("meta") {
        Some(Value::Object(m)) => m.clone(),
        None => Map::new(),
        Some(_) => return Err(IoError::Malformed("meta must be an object".into())),
    };
    let rows = doc
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Malformed("missing data array".into()))?;
    let columns: Vec<String> = match rows.first() {
        Some(Value::Object(first)) => first.keys().cloned().collect(),
        Some(_) => return Err(IoError::Malformed("data rows must be objects".into())),
        None => Vec::new(),
    };
    let mut table = Table::new(columns.clone());
    for (i, row) in rows.iter().enumerate() {
        let obj = row
            .as_object()
            .ok_or_else(|| IoError::Malformed(format!("data row {i} is not an object")))?;
        let cells = columns
            .iter()
            .map(|c| match obj.get(c) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::Number(n)) => Ok(n.as_f64()),
                Some(other) => Err(IoError::Malformed(format!("data row {i}: {c} is {other}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        table.push(cells);
    }
    Ok((meta, table))
}

/// Background permittivity recorded in a JSON `meta` object, either
/// directly or through the model.
fn meta_eps_r(meta: &Map<String, Value>) -> Option<f64> {
    if let Some(v) = meta.get("eps_r").and_then(Value::as_f64) {
        return Some(v);
    }
    let model: DielectricModel = serde_json::from_value(meta.get("model")?.clone()).ok()?;
    Some(model.eps_r())
}

/// Parses a measured ratio trace from CSV or a JSON envelope. Columns:
/// `omega`, `ratio` (or `value`), optional `sigma`. Rows with a missing
/// omega or ratio are skipped. `eps_r` overrides any value in the file and
/// defaults to 1.
pub fn read_trace(text: &str, eps_r: Option<f64>) -> Result<MeasuredTrace, IoError> {
    let (meta, table) = if text.trim_start().starts_with('{') {
        read_json_table(text)?
    } else {
        (Map::new(), read_csv_table(text)?)
    };
    let omega = table
        .column("omega")
        .ok_or_else(|| IoError::Malformed("no omega column".into()))?;
    let ratio = table
        .column("ratio")
        .or_else(|| table.column("value"))
        .ok_or_else(|| IoError::Malformed("no ratio or value column".into()))?;
    let sigma = table.column("sigma");

    let mut trace = MeasuredTrace {
        omega: Vec::with_capacity(omega.len()),
        ratio: Vec::with_capacity(omega.len()),
        sigma: sigma.as_ref().map(|_| Vec::with_capacity(omega.len())),
        eps_r: eps_r.or_else(|| meta_eps_r(&meta)).unwrap_or(1.0),
    };
    for i in 0..omega.len() {
        let (Some(w), Some(r)) = (omega[i], ratio[i]) else {
            continue;
        };
        trace.omega.push(w);
        trace.ratio.push(r);
        if let (Some(out), Some(s)) = (trace.sigma.as_mut(), sigma.as_ref()) {
            out.push(s[i].unwrap_or(0.0));
        }
    }
    Ok(trace)
}
