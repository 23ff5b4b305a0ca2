//! Per-epoch metric rows and the JSON-lines log format.
//!
//! A log file holds, in order: an optional header object `{"config": ..., "seed": ...}`,
//! one [`MetricsRecord`] object per line, and a closing
//! `{"summary": {"best_mean_acc": .., "last_mean_acc": ..}}` line.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::trainer::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Iterative,
    Finetune,
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRecord {
    /// 1-based epoch within `stage`.
    pub epoch: u32,
    pub stage: Stage,
    pub mode: Mode,
    /// Label-update events so far.
    pub k: u32,
    pub tau_est: f64,
    /// Joint-loss weight in force; absent for single-network training.
    pub lambda: Option<f64>,
    pub acc1: f64,
    pub acc2: Option<f64>,
    pub mean_acc: f64,
    pub disagreement_rate: Option<f64>,
    /// Fraction of current training labels equal to the hidden clean labels.
    pub label_acc: Option<f64>,
    pub num_corrected_this_event: usize,
    pub retrained: bool,
    /// Only filled when timing is enabled; it would otherwise break byte-identical logs.
    pub wall_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub best_mean_acc: Option<f64>,
    pub last_mean_acc: Option<f64>,
}

pub fn summarize(records: &[MetricsRecord]) -> Summary {
    Summary {
        best_mean_acc: records.iter().map(|r| r.mean_acc).reduce(f64::max),
        last_mean_acc: records.last().map(|r| r.mean_acc),
    }
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Format(e.to_string()))
}

/// Renders a full log. `header` is written first when present.
pub fn render_metrics(header: Option<&Value>, records: &[MetricsRecord]) -> Result<String> {
    let mut out = String::new();
    if let Some(h) = header {
        let _ = writeln!(out, "{}", json_line(h)?);
    }
    for r in records {
        let _ = writeln!(out, "{}", json_line(r)?);
    }
    let _ = writeln!(out, "{}", json_line(&json!({ "summary": summarize(records) }))?);
    Ok(out)
}

/// Writes records plus the summary line (no header).
pub fn write_metrics(records: &[MetricsRecord], path: &Path) -> Result<()> {
    write_log(None, records, path)
}

pub fn write_log(header: Option<&Value>, records: &[MetricsRecord], path: &Path) -> Result<()> {
    let text = render_metrics(header, records)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parsed contents of a log file.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub header: Option<Value>,
    pub records: Vec<MetricsRecord>,
    pub summary: Option<Summary>,
}

pub fn parse_metrics(text: &str) -> Result<MetricsLog> {
    let mut log = MetricsLog {
        header: None,
        records: Vec::new(),
        summary: None,
    };
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |e: serde_json::Error| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        };
        let v: Value = serde_json::from_str(line).map_err(bad)?;
        if let Some(s) = v.get("summary") {
            log.summary = Some(serde_json::from_value(s.clone()).map_err(bad)?);
        } else if v.get("config").is_some() {
            log.header = Some(v);
        } else {
            log.records.push(serde_json::from_value(v).map_err(bad)?);
        }
    }
    Ok(log)
}

pub fn read_metrics(path: &Path) -> Result<MetricsLog> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_metrics(&text)
}
