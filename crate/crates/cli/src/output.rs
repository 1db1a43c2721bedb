//! Row values and CSV / JSON-lines emission.
//!
//! Conventions: infinities serialize as the string "inf"; absent values as an
//! empty CSV field / JSON null. Column order is grid axes, then outputs, then
//! status flags. The schema is versioned through the leading `schema` column.

use std::io::Write;

pub const SCHEMA: &str = "ohm-sweep/1";

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Absent,
}

impl Value {
    pub fn csv(&self) -> String {
        match self {
            Value::Num(x) => format_float(*x),
            Value::Bool(b) => b.to_string(),
            Value::Absent => String::new(),
        }
    }

    pub fn json(&self) -> serde_json::Value {
        match self {
            Value::Num(x) => {
                if x.is_finite() {
                    serde_json::json!(x)
                } else if x.is_nan() {
                    serde_json::Value::Null
                } else if *x > 0.0 {
                    serde_json::json!("inf")
                } else {
                    serde_json::json!("-inf")
                }
            }
            Value::Bool(b) => serde_json::json!(b),
            Value::Absent => serde_json::Value::Null,
        }
    }
}

fn format_float(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // shortest round-trip representation; deterministic
    format!("{x}")
}

/// One grid point with its computed outputs.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub values: Vec<(String, Value)>,
}

/// RFC-4180 quoting ('.' decimal separator comes from the float formatter).
fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn write_csv_header(
    out: &mut dyn Write,
    columns: &[String],
) -> std::io::Result<()> {
    let mut cols = vec!["schema".to_string()];
    cols.extend(columns.iter().cloned());
    writeln!(
        out,
        "{}",
        cols.iter().map(|c| csv_escape(c)).collect::<Vec<_>>().join(",")
    )
}

pub fn write_csv_row(out: &mut dyn Write, row: &SweepRow) -> std::io::Result<()> {
    let mut fields = vec![SCHEMA.to_string()];
    fields.extend(row.values.iter().map(|(_, v)| csv_escape(&v.csv())));
    writeln!(out, "{}", fields.join(","))
}

pub fn write_jsonl_row(out: &mut dyn Write, row: &SweepRow) -> std::io::Result<()> {
    let mut map = serde_json::Map::new();
    map.insert("schema".into(), serde_json::json!(SCHEMA));
    for (k, v) in &row.values {
        map.insert(k.clone(), v.json());
    }
    writeln!(out, "{}", serde_json::Value::Object(map))
}
