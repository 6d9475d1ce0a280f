use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use driftsets_core::PredictionSet;

/// Finite values as numbers; infinities and NaN as strings, which JSON
/// cannot represent otherwise.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else if v.is_nan() {
        Value::from("nan")
    } else if v > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

/// `{x, lower, upper, width}`; an empty set has null endpoints.
pub fn set_json(x: &[f64], set: &PredictionSet) -> Value {
    let (lower, upper) = match set.bounds() {
        Some((l, u)) => (num(l), num(u)),
        None => (Value::Null, Value::Null),
    };
    serde_json::json!({ "x": x, "lower": lower, "upper": upper, "width": num(set.width()) })
}

pub fn json_line(v: &Value) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
pub struct CondRow<'a> {
    pub method: &'a str,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
    pub norm: f64,
    pub coverage: f64,
    pub width: f64,
}

/// A `# config <json>` line, then headed CSV rows.
pub fn write_commented_csv<T: Serialize>(path: &Path, config: &impl Serialize, rows: &[T]) -> anyhow::Result<()> {
    let ctx = || format!("writing {}", path.display());
    let mut out = BufWriter::new(File::create(path).with_context(ctx)?);
    writeln!(out, "# config {}", serde_json::to_string(config)?)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).with_context(ctx)?;
    }
    w.flush().with_context(ctx)?;
    Ok(())
}
