//! Deterministic file emission: CSV with LF endings and '.' decimals, JSON
//! re-parsed after serialization as a structural check.

use serde_json::Value;
use std::fs;
use std::path::Path;

pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), String> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(format!(
                "row width {} does not match header width {}",
                row.len(),
                header.len()
            ));
        }
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Writes JSON and validates the emitted bytes parse back to the same value
/// with all the required top-level keys present.
pub fn write_json(path: &Path, value: &Value, required: &[&str]) -> Result<(), String> {
    for key in required {
        if value.get(key).is_none() {
            return Err(format!("emitted JSON misses required key '{key}'"));
        }
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())? + "\n";
    let reparsed: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    if &reparsed != value {
        return Err("emitted JSON does not round-trip".into());
    }
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
