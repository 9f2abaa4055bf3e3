//! Evaluation: metrics, stratified splitting, the experiment sweeps, and
//! phase timing.

pub mod metrics;
pub mod pipeline;
pub mod split;
pub mod sweep;
pub mod timing;

pub use metrics::{
    accuracy, confusion, f1, metric_cell, precision, recall, ConfusionCounts, MetricsReport,
};
pub use pipeline::{
    default_train_stride, evaluate_point, fit_stats_on_windows, replay_alpha, PointConfig,
    PointOutcome,
};
pub use split::split_dataset;
pub use sweep::{run_sweep, SweepRow, SweepSpec, SweepValue, SweepVariable};
pub use timing::{format_seconds, time_phases, PhaseTimings};
