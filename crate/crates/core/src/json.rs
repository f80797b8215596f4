//! Small JSON helpers shared by report types.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

/// Lists longer than this are emitted as runs.
pub const RLE_THRESHOLD: usize = 10_000;

/// Exact rational as `"num/den"` (or `"num"` for integers).
pub fn rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn big(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => Value::from(v),
        None => Value::from(x.to_string()),
    }
}

/// Sorted integers as a plain array, or `{"runs": [[start, length], ...], "count": n}`
/// when the list is long.
pub fn sorted_list(values: &[i64]) -> Value {
    if values.len() <= RLE_THRESHOLD {
        return json!(values);
    }
    json!({ "runs": runs(values), "count": values.len() })
}

pub fn runs(values: &[i64]) -> Vec<[i64; 2]> {
    let mut out: Vec<[i64; 2]> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some([start, len]) if *start + *len == v => *len += 1,
            _ => out.push([v, 1]),
        }
    }
    out
}
