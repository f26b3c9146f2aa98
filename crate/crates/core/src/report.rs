//! Structured-text records.
//!
//! Records are JSON objects. Floating values are rounded to 15 significant
//! digits before serialization so that output is stable across platforms and
//! free of last-bit noise.

use serde::{Serialize, Serializer};

pub const SIGNIFICANT_DIGITS: usize = 15;

pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

pub(crate) fn sig<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    round_sig(*x, SIGNIFICANT_DIGITS).serialize(s)
}

pub(crate) fn sig_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    xs.iter()
        .map(|x| round_sig(*x, SIGNIFICANT_DIGITS))
        .collect::<Vec<_>>()
        .serialize(s)
}

pub(crate) fn sig_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    x.map(|v| round_sig(v, SIGNIFICANT_DIGITS)).serialize(s)
}

/// One-line JSON record.
pub fn to_record<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("records contain only finite-or-null numbers and strings")
}
