//! Confusion counts and the derived metrics. The positive class is attack.
//! Metrics with a zero denominator are reported as undefined (`None`), never
//! silently coerced to 0 or 1.

use crate::detect::Verdict;
use crate::error::{Error, Result};
use crate::sim::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }
}

/// Tallies predictions against ground truth.
pub fn confusion(predictions: &[Verdict], labels: &[Label]) -> Result<ConfusionCounts> {
    if predictions.len() != labels.len() {
        return Err(Error::Incompatible(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (p, l) in predictions.iter().zip(labels) {
        match (p.is_attack(), l.is_attack()) {
            (true, true) => c.true_positive += 1,
            (true, false) => c.false_positive += 1,
            (false, false) => c.true_negative += 1,
            (false, true) => c.false_negative += 1,
        }
    }
    Ok(c)
}

pub fn precision(c: &ConfusionCounts) -> Option<f64> {
    let denom = c.true_positive + c.false_positive;
    (denom > 0).then(|| c.true_positive as f64 / denom as f64)
}

pub fn recall(c: &ConfusionCounts) -> Option<f64> {
    let denom = c.true_positive + c.false_negative;
    (denom > 0).then(|| c.true_positive as f64 / denom as f64)
}

/// Harmonic mean of precision and recall; undefined when either is undefined
/// or both are zero.
pub fn f1(c: &ConfusionCounts) -> Option<f64> {
    let p = precision(c)?;
    let r = recall(c)?;
    if p + r == 0.0 {
        return None;
    }
    Some(2.0 * p * r / (p + r))
}

pub fn accuracy(c: &ConfusionCounts) -> Option<f64> {
    let total = c.total();
    (total > 0).then(|| (c.true_positive + c.true_negative) as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub counts: ConfusionCounts,
}

impl MetricsReport {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        MetricsReport {
            accuracy: accuracy(&counts),
            precision: precision(&counts),
            recall: recall(&counts),
            f1: f1(&counts),
            counts,
        }
    }

    pub fn from_predictions(predictions: &[Verdict], labels: &[Label]) -> Result<Self> {
        Ok(Self::from_counts(confusion(predictions, labels)?))
    }
}

/// `NA` for undefined metrics, used by every CSV this crate writes.
pub fn metric_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "NA".into(),
    }
}
