//! Wall-clock timing of the train and detect phases, simulation and I/O
//! excluded.

use crate::detect::Arch;
use crate::error::Result;
use crate::eval::pipeline::{evaluate_point, PointConfig};
use crate::nn::train::TrainConfig;
use crate::sim::TrafficSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTimings {
    pub train_s: f64,
    pub detect_s: f64,
}

/// Formats a timing the way the result tables report it.
pub fn format_seconds(s: f64) -> String {
    format!("{s:.2}")
}

/// Trains one detector on the dataset and measures the training loop and a
/// full-stream detection pass, nothing else.
pub fn time_phases(
    samples: &[TrafficSample],
    arch: Arch,
    train: &TrainConfig,
    train_fraction: f64,
    alpha: usize,
) -> Result<PhaseTimings> {
    let point = PointConfig {
        arch,
        train: train.clone(),
        train_fraction,
        alpha,
        stride: None,
    };
    let outcome = evaluate_point(samples, None, &point)?;
    Ok(PhaseTimings {
        train_s: outcome.train_s,
        detect_s: outcome.detect_s,
    })
}
