//! Tabular reports of computed values against reference values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One computed value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub d: usize,
    pub method: String,
    pub value: f64,
    pub reference: Option<f64>,
    /// `value − reference`
    pub delta: Option<f64>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub wall_ms: u64,
}

impl ReportRow {
    pub fn new(d: usize, method: impl Into<String>, value: f64, reference: Option<f64>) -> Self {
        ReportRow {
            d,
            method: method.into(),
            value,
            reference,
            delta: reference.map(|r| value - r),
            restarts: None,
            seed: None,
            wall_ms: 0,
        }
    }
}

/// Rows plus the verdict of a comparison, when one was made.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub rows: Vec<ReportRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    /// Command-specific extras such as strategy tables.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::validation(format!("cannot serialize report: {e}")))
    }

    /// Rows only, with the header `d,method,value,reference,delta,restarts,seed,wall_ms`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)
                .map_err(|e| Error::validation(format!("cannot write csv: {e}")))?;
        }
        if self.rows.is_empty() {
            w.write_record(CSV_HEADER)
                .map_err(|e| Error::validation(format!("cannot write csv: {e}")))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::validation(format!("cannot write csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub const CSV_HEADER: [&str; 8] = ["d", "method", "value", "reference", "delta", "restarts", "seed", "wall_ms"];
