//! Fixed nine-significant-digit number formatting for CSV and JSON output.

use nessim_core::{BlochMap, BlochVector};
use serde_json::{json, Value};

pub const SIGNIFICANT_DIGITS: usize = 9;

/// `x` rounded to nine significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// Shortest text that reads back as `round_sig(x)`; `inf`/`-inf`/`nan` for
/// non-finite values. Negative zero prints as `0`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if (1e-4..1e9).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// JSON number rounded to nine significant digits; non-finite values become
/// the strings `"inf"`, `"-inf"` or `"nan"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        let r = round_sig(x);
        json!(if r == 0.0 { 0.0 } else { r })
    } else {
        Value::String(fmt_num(x))
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Row-major array of arrays.
pub fn map(m: &BlochMap) -> Value {
    Value::Array(m.rows().iter().map(|r| nums(r)).collect())
}

pub fn vector(a: &BlochVector) -> Value {
    nums(&[a.ax(), a.ay(), a.az()])
}
