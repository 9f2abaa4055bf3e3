//! Output tables: detection records, training history, and sweep results.
//! Verdicts and states are encoded as 0/1 (1 = attack / under attack).

use std::fmt::Write as _;

use crate::detect::{DetectionRecord, NetworkState, Verdict};
use crate::error::{Error, Result};
use crate::eval::metrics::metric_cell;
use crate::eval::{format_seconds, SweepRow};
use crate::nn::train::EpochLoss;

pub const DETECTION_HEADER: &str = "t,probability,verdict,state";
pub const HISTORY_HEADER: &str = "epoch,train_loss,val_loss";
pub const RESULT_HEADER: &str =
    "variable,value,arch,rep,seed,accuracy,precision,recall,f1,latency_s,train_s,detect_s";

pub fn detection_to_csv(records: &[DetectionRecord]) -> String {
    let mut out = String::from(DETECTION_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{:.3},{},{},{}",
            r.timestamp,
            r.probability,
            r.verdict.is_attack() as u8,
            r.state.is_under_attack() as u8
        );
    }
    out
}

/// Reads a detection CSV back; used to recompute summary metrics from the
/// emitted file.
pub fn detection_from_csv(text: &str) -> Result<Vec<DetectionRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == DETECTION_HEADER => {}
        _ => return Err(Error::parse(1, format!("header must be '{DETECTION_HEADER}'"))),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(line_no, "expected 4 fields"));
        }
        let timestamp: f64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(line_no, "bad timestamp"))?;
        let probability: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(line_no, "bad probability"))?;
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::parse(line_no, "probability outside [0,1]"));
        }
        let verdict = match fields[2] {
            "0" => Verdict::Normal,
            "1" => Verdict::Attack,
            v => return Err(Error::parse(line_no, format!("verdict '{v}' is not 0 or 1"))),
        };
        let state = match fields[3] {
            "0" => NetworkState::Normal,
            "1" => NetworkState::UnderAttack,
            v => return Err(Error::parse(line_no, format!("state '{v}' is not 0 or 1"))),
        };
        records.push(DetectionRecord {
            timestamp,
            probability,
            verdict,
            state,
        });
    }
    Ok(records)
}

pub fn history_to_csv(history: &[EpochLoss]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for e in history {
        let _ = writeln!(out, "{},{},{}", e.epoch, e.train_loss, e.val_loss);
    }
    out
}

pub fn results_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(RESULT_HEADER);
    out.push('\n');
    for r in rows {
        let (acc, prec, rec, f1) = match &r.metrics {
            Some(m) => (m.accuracy, m.precision, m.recall, m.f1),
            None => (None, None, None, None),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.variable.name(),
            r.value,
            r.arch,
            r.rep,
            r.seed,
            metric_cell(acc),
            metric_cell(prec),
            metric_cell(rec),
            metric_cell(f1),
            r.latency_s.map(|v| v.to_string()).unwrap_or_else(|| "NA".into()),
            r.train_s.map(format_seconds).unwrap_or_else(|| "NA".into()),
            r.detect_s.map(format_seconds).unwrap_or_else(|| "NA".into()),
        );
    }
    out
}

/// One parsed row of a results table, kept as strings plus the numeric cells
/// the report command aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub variable: String,
    pub value: String,
    pub arch: String,
    pub rep: usize,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub latency_s: Option<f64>,
    pub train_s: Option<f64>,
    pub detect_s: Option<f64>,
}

pub fn results_from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RESULT_HEADER => {}
        _ => return Err(Error::parse(1, format!("header must be '{RESULT_HEADER}'"))),
    }
    let cell = |s: &str, line: usize, what: &str| -> Result<Option<f64>> {
        if s == "NA" {
            return Ok(None);
        }
        s.parse::<f64>()
            .map(Some)
            .map_err(|_| Error::parse(line, format!("bad {what} '{s}'")))
    };
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(Error::parse(line_no, "expected 12 fields"));
        }
        rows.push(ResultRow {
            variable: f[0].to_string(),
            value: f[1].to_string(),
            arch: f[2].to_string(),
            rep: f[3]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad rep"))?,
            seed: f[4]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad seed"))?,
            accuracy: cell(f[5], line_no, "accuracy")?,
            precision: cell(f[6], line_no, "precision")?,
            recall: cell(f[7], line_no, "recall")?,
            f1: cell(f[8], line_no, "f1")?,
            latency_s: cell(f[9], line_no, "latency")?,
            train_s: cell(f[10], line_no, "train_s")?,
            detect_s: cell(f[11], line_no, "detect_s")?,
        });
    }
    Ok(rows)
}
