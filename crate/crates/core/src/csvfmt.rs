//! Text formatting shared by all emitted tables.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits (round-trips bit-exactly).
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Parses a float written by [`fmt_f64`] (or any standard float literal).
pub fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Input(format!("line {line}: cannot parse '{field}' as a number: {e}")))
}

/// Joins a row of floats with `,`.
pub fn row(values: impl IntoIterator<Item = f64>) -> String {
    let mut out = String::new();
    for (k, v) in values.into_iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "{}", fmt_f64(v));
    }
    out
}

/// Equal-width histogram over `[lo, hi]`; the top edge is closed.
/// Returns `(left, right, count)` triples.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<(f64, f64, usize)> {
    assert!(bins > 0);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values.iter().filter(|v| v.is_finite()) {
        let idx = (((v - lo) / width).floor() as isize).clamp(0, bins as isize - 1);
        counts[idx as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| {
            let left = lo + width * b as f64;
            let right = if b + 1 == bins { hi } else { lo + width * (b + 1) as f64 };
            (left, right, c)
        })
        .collect()
}

/// Range of the finite values, or `None` if there are none.
pub fn finite_range(values: &[f64]) -> Option<(f64, f64)> {
    values.iter().filter(|v| v.is_finite()).fold(None, |acc, &v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}
