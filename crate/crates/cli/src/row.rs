//! Result rows and their text encodings.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::config::Format;
use crate::error::{CliError, Result};

/// A grid coordinate or other per-row parameter.
///
/// Text values are identifiers; they never read as numbers, which is what
/// lets CSV cells recover their type.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    fn cell(&self) -> String {
        match self {
            ParamValue::Int(v) => v.to_string(),
            ParamValue::Float(v) => fmt_float(*v),
            ParamValue::Text(s) => s.clone(),
        }
    }

    fn from_cell(s: &str) -> ParamValue {
        if let Ok(v) = s.parse::<i64>() {
            return ParamValue::Int(v);
        }
        match parse_float(s) {
            Some(v) => ParamValue::Float(v),
            None => ParamValue::Text(s.to_string()),
        }
    }

    fn json(&self) -> String {
        match self {
            ParamValue::Int(v) => v.to_string(),
            ParamValue::Float(v) => json_float(*v),
            ParamValue::Text(s) => Value::String(s.clone()).to_string(),
        }
    }

    fn from_json(v: &Value) -> Result<ParamValue> {
        match v {
            Value::Number(n) if n.is_i64() => Ok(ParamValue::Int(n.as_i64().expect("checked"))),
            Value::Number(n) => Ok(ParamValue::Float(n.as_f64().ok_or_else(|| bad("number out of range"))?)),
            Value::String(s) => Ok(match non_finite(s) {
                Some(v) => ParamValue::Float(v),
                None => ParamValue::Text(s.clone()),
            }),
            _ => Err(bad("parameters must be numbers or strings")),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.cell())
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Float(v)
    }
}

impl From<usize> for ParamValue {
    fn from(v: usize) -> Self {
        ParamValue::Int(v as i64)
    }
}

impl From<u64> for ParamValue {
    fn from(v: u64) -> Self {
        ParamValue::Int(v as i64)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

impl From<String> for ParamValue {
    fn from(v: String) -> Self {
        ParamValue::Text(v)
    }
}

/// One measurement against its theoretical value.
///
/// `pass` is `measured ≤ theoretical + slack`, where `slack` is the last
/// parameter column whenever it is present.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub params: Vec<(String, ParamValue)>,
    pub measured: f64,
    pub theoretical: f64,
    pub pass: bool,
    pub runtime_ms: u64,
}

impl ResultRow {
    /// Builds a row, appending `slack` to the parameters and deriving the
    /// pass flag from it.
    pub fn new(
        experiment: &str,
        mut params: Vec<(String, ParamValue)>,
        measured: f64,
        theoretical: f64,
        slack: f64,
    ) -> Self {
        params.push(("slack".into(), ParamValue::Float(slack)));
        ResultRow {
            experiment: experiment.into(),
            params,
            measured,
            theoretical,
            pass: measured <= theoretical + slack,
            runtime_ms: 0,
        }
    }

    pub fn param(&self, key: &str) -> Option<&ParamValue> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// Whether the pass flag agrees with the row's own numbers.
    pub fn consistent(&self) -> bool {
        let slack = match self.param("slack") {
            Some(ParamValue::Float(s)) => *s,
            Some(ParamValue::Int(s)) => *s as f64,
            Some(ParamValue::Text(_)) => return false,
            None => 0.0,
        };
        self.pass == (self.measured <= self.theoretical + slack)
    }
}

/// Shorthand for building parameter lists.
#[macro_export]
macro_rules! params {
    ($($k:expr => $v:expr),* $(,)?) => {
        vec![$(($k.to_string(), $crate::row::ParamValue::from($v))),*]
    };
}

/// 17 significant digits, which round-trips every finite `f64`.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn json_float(v: f64) -> String {
    if v.is_finite() {
        fmt_float(v)
    } else {
        format!("\"{}\"", fmt_float(v))
    }
}

fn non_finite(s: &str) -> Option<f64> {
    match s {
        "NaN" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

/// Inverse of [`fmt_float`]: an exponent-form number or a non-finite token.
fn parse_float(s: &str) -> Option<f64> {
    non_finite(s).or_else(|| if s.contains('e') { s.parse().ok() } else { None })
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

fn param_keys(rows: &[ResultRow]) -> Result<Vec<String>> {
    let keys: Vec<String> = rows.first().map_or(Vec::new(), |r| r.params.iter().map(|(k, _)| k.clone()).collect());
    for r in rows {
        if r.params.len() != keys.len() || r.params.iter().zip(&keys).any(|((k, _), want)| k != want) {
            return Err(bad("rows disagree on parameter columns"));
        }
    }
    Ok(keys)
}

const FIXED_TAIL: [&str; 4] = ["measured", "theoretical", "pass", "runtime_ms"];

pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    let keys = param_keys(rows)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["experiment".to_string()];
    header.extend(keys);
    header.extend(FIXED_TAIL.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.experiment.clone()];
        rec.extend(r.params.iter().map(|(_, v)| v.cell()));
        rec.push(fmt_float(r.measured));
        rec.push(fmt_float(r.theoretical));
        rec.push(r.pass.to_string());
        rec.push(r.runtime_ms.to_string());
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| bad(e.to_string()))
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    let n = header.len();
    if n < 1 + FIXED_TAIL.len() || header[0] != "experiment" || header[n - 4..] != FIXED_TAIL {
        return Err(bad("unexpected CSV header"));
    }
    let keys = &header[1..n - 4];
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let cell = |i: usize| rec.get(i).ok_or_else(|| bad("short record"));
        let num = |i: usize| -> Result<f64> { parse_float(cell(i)?).ok_or_else(|| bad("bad float cell")) };
        rows.push(ResultRow {
            experiment: cell(0)?.to_string(),
            params: keys
                .iter()
                .enumerate()
                .map(|(j, k)| Ok((k.clone(), ParamValue::from_cell(cell(1 + j)?))))
                .collect::<Result<_>>()?,
            measured: num(n - 4)?,
            theoretical: num(n - 3)?,
            pass: cell(n - 2)?.parse().map_err(|_| bad("bad pass cell"))?,
            runtime_ms: cell(n - 1)?.parse().map_err(|_| bad("bad runtime cell"))?,
        });
    }
    Ok(rows)
}

/// A JSON array with one object per line; keys follow the CSV column order.
pub fn to_json(rows: &[ResultRow]) -> Result<String> {
    param_keys(rows)?;
    if rows.is_empty() {
        return Ok("[]\n".into());
    }
    let mut out = String::from("[\n");
    for (i, r) in rows.iter().enumerate() {
        let mut fields = vec![format!("\"experiment\":{}", Value::String(r.experiment.clone()))];
        for (k, v) in &r.params {
            fields.push(format!("{}:{}", Value::String(k.clone()), v.json()));
        }
        fields.push(format!("\"measured\":{}", json_float(r.measured)));
        fields.push(format!("\"theoretical\":{}", json_float(r.theoretical)));
        fields.push(format!("\"pass\":{}", r.pass));
        fields.push(format!("\"runtime_ms\":{}", r.runtime_ms));
        out.push_str("  {");
        out.push_str(&fields.join(","));
        out.push('}');
        out.push_str(if i + 1 < rows.len() { ",\n" } else { "\n" });
    }
    out.push_str("]\n");
    Ok(out)
}

pub fn parse_json(text: &str) -> Result<Vec<ResultRow>> {
    let Value::Array(items) = serde_json::from_str::<Value>(text)? else {
        return Err(bad("expected a JSON array"));
    };
    items
        .iter()
        .map(|item| {
            let Value::Object(map) = item else {
                return Err(bad("expected an object per row"));
            };
            let num = |key: &str| -> Result<f64> {
                match map.get(key) {
                    Some(Value::Number(n)) => n.as_f64().ok_or_else(|| bad("number out of range")),
                    Some(Value::String(s)) => non_finite(s).ok_or_else(|| bad(format!("bad {key}"))),
                    _ => Err(bad(format!("missing {key}"))),
                }
            };
            let experiment = match map.get("experiment") {
                Some(Value::String(s)) => s.clone(),
                _ => return Err(bad("missing experiment")),
            };
            let pass = map.get("pass").and_then(Value::as_bool).ok_or_else(|| bad("missing pass"))?;
            let runtime_ms = map.get("runtime_ms").and_then(Value::as_u64).ok_or_else(|| bad("missing runtime_ms"))?;
            let params = map
                .iter()
                .filter(|(k, _)| k.as_str() != "experiment" && !FIXED_TAIL.contains(&k.as_str()))
                .map(|(k, v)| Ok((k.clone(), ParamValue::from_json(v)?)))
                .collect::<Result<_>>()?;
            Ok(ResultRow {
                experiment,
                params,
                measured: num("measured")?,
                theoretical: num("theoretical")?,
                pass,
                runtime_ms,
            })
        })
        .collect()
}

pub fn encode(rows: &[ResultRow], format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
    }
}

pub fn decode(text: &str, format: Format) -> Result<Vec<ResultRow>> {
    match format {
        Format::Csv => parse_csv(text),
        Format::Json => parse_json(text),
    }
}

/// Writes the encoded rows to `path`, or to stdout when `path` is `None`.
pub fn emit(rows: &[ResultRow], format: Format, path: Option<&Path>) -> Result<()> {
    let text = encode(rows, format)?;
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
