//! Field-wise comparison of two run reports.

use std::fmt;

use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    fn accepts(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.abs + self.rel * a.abs().max(b.abs())
    }
}

/// The reports are not the same kind of document.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaMismatch(pub String);

impl fmt::Display for SchemaMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "schema mismatch: {}", self.0)
    }
}

impl std::error::Error for SchemaMismatch {}

/// One out-of-tolerance field.
#[derive(Debug, Clone, PartialEq)]
pub struct Difference {
    pub path: String,
    pub detail: String,
}

impl fmt::Display for Difference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.detail)
    }
}

/// Differences restricted to paths under any of `fields` (all when empty).
pub fn compare_reports(
    a: &Value,
    b: &Value,
    tol: Tolerance,
    fields: &[String],
) -> Result<Vec<Difference>, SchemaMismatch> {
    let scenario = |v: &Value| {
        v.get("scenario")
            .and_then(Value::as_str)
            .map(str::to_string)
    };
    match (scenario(a), scenario(b)) {
        (Some(x), Some(y)) if x == y => {}
        (Some(x), Some(y)) => return Err(SchemaMismatch(format!("scenario `{x}` vs `{y}`"))),
        _ => return Err(SchemaMismatch("missing `scenario` field".into())),
    }
    let mut diffs = Vec::new();
    walk("", a, b, tol, fields, &mut diffs)?;
    Ok(diffs)
}

fn selected(path: &str, fields: &[String]) -> bool {
    fields.is_empty()
        || fields.iter().any(|f| {
            path.strip_prefix(f.as_str()).is_some_and(|rest| {
                rest.is_empty() || rest.starts_with('.') || rest.starts_with('[')
            })
        })
}

/// Whether anything under `path` can still be selected.
fn reachable(path: &str, fields: &[String]) -> bool {
    path.is_empty() || selected(path, fields) || fields.iter().any(|f| f.starts_with(path))
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn walk(
    path: &str,
    a: &Value,
    b: &Value,
    tol: Tolerance,
    fields: &[String],
    out: &mut Vec<Difference>,
) -> Result<(), SchemaMismatch> {
    if !reachable(path, fields) {
        return Ok(());
    }
    let mut differ = |detail: String| {
        if selected(path, fields) {
            out.push(Difference {
                path: path.to_string(),
                detail,
            });
        }
    };
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            if let Some(key) = x
                .keys()
                .find(|k| !y.contains_key(*k))
                .or_else(|| y.keys().find(|k| !x.contains_key(*k)))
            {
                let at = if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                };
                return Err(SchemaMismatch(format!(
                    "field `{at}` present in only one report"
                )));
            }
            for (key, va) in x {
                let at = if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                };
                walk(&at, va, &y[key], tol, fields, out)?;
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                differ(format!("length {} vs {}", x.len(), y.len()));
            } else {
                for (i, (va, vb)) in x.iter().zip(y).enumerate() {
                    walk(&format!("{path}[{i}]"), va, vb, tol, fields, out)?;
                }
            }
        }
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (
                x.as_f64().unwrap_or(f64::NAN),
                y.as_f64().unwrap_or(f64::NAN),
            );
            if !tol.accepts(x, y) {
                differ(format!("{x:e} vs {y:e} (difference {:e})", (x - y).abs()));
            }
        }
        // non-finite numbers and absent optional sections serialize as null
        (Value::Null, _) | (_, Value::Null) if a != b => {
            differ(format!("{} vs {}", short(a), short(b)))
        }
        (Value::String(_), Value::String(_)) | (Value::Bool(_), Value::Bool(_)) if a != b => {
            differ(format!("{a} vs {b}"))
        }
        _ if kind(a) != kind(b) => {
            return Err(SchemaMismatch(format!(
                "`{path}` is {} in one report and {} in the other",
                kind(a),
                kind(b)
            )))
        }
        _ => {}
    }
    Ok(())
}

fn short(v: &Value) -> String {
    match v {
        Value::Object(_) | Value::Array(_) => kind(v).to_string(),
        _ => v.to_string(),
    }
}
