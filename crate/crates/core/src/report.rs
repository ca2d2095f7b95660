//! JSON output with floats rounded to a fixed number of significant digits.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Significant digits of every float written to reports.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to `digits` significant digits. Non-finite values pass through.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 || digits == 0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            if let Some(m) = serde_json::Number::from_f64(round_sig(x, digits)) {
                *n = m;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(|x| round_value(x, digits)),
        Value::Object(o) => o.values_mut().for_each(|x| round_value(x, digits)),
        _ => {}
    }
}

/// `value` as a JSON tree with every float rounded to [`SIGNIFICANT_DIGITS`].
pub fn to_rounded_value<T: Serialize>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Precondition(e.to_string()))?;
    round_value(&mut v, SIGNIFICANT_DIGITS);
    Ok(v)
}

/// Pretty-printed JSON with floats rounded to [`SIGNIFICANT_DIGITS`].
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = to_rounded_value(value)?;
    serde_json::to_string_pretty(&v).map_err(|e| Error::Precondition(e.to_string()))
}

/// A float formatted with [`SIGNIFICANT_DIGITS`] significant digits, for CSV and text output.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    round_sig(x, SIGNIFICANT_DIGITS).to_string()
}
