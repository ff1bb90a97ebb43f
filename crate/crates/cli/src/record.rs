//! JSON-lines experiment records.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const VERSION: &str = concat!("tracelab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub outputs: Value,
    /// `None` for deterministic commands run without a seed.
    pub seed: Option<u64>,
    pub timestamp: String,
    pub version: String,
}

/// ISO-8601 UTC timestamp, taken from `SOURCE_DATE_EPOCH` when it is set.
pub fn timestamp() -> String {
    let at = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now);
    at.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Serializes records one per line.
pub fn to_json_lines(records: &[ExperimentRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Writes a CSV table. Cells are plain numbers or bit strings, so no quoting is needed.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
