//! The window -> split -> train -> detect pipeline shared by the sweep
//! harness, the timing harness, and the CLI.

use std::time::Instant;

use crate::detect::{
    build_detector, classify, detect_stream, featurize, featurize_all, windows, Arch,
    DetectionRun, DetectorModel, FeatureStats, Verdict, Window,
};
use crate::error::{Error, Result};
use crate::eval::metrics::MetricsReport;
use crate::eval::split::split_dataset;
use crate::nn::train::{train, TrainConfig, TrainReport};
use crate::sim::{Label, TrafficSample};

/// Stride used when cutting *training* windows out of the stream. Detection
/// always slides by one sample; training on every LSTM window would mostly
/// revisit near-duplicates, so the LSTM thins them out.
pub fn default_train_stride(arch: Arch) -> usize {
    match arch {
        Arch::Ann => 1,
        Arch::Cnn => 1,
        Arch::Lstm => 4,
    }
}

/// Fits normalization statistics over exactly the samples covered by the
/// given windows (usually the training split).
pub fn fit_stats_on_windows(samples: &[TrafficSample], windows: &[Window]) -> Result<FeatureStats> {
    let mut used = vec![false; samples.len()];
    for w in windows {
        for flag in used.iter_mut().skip(w.start).take(w.len) {
            *flag = true;
        }
    }
    let covered: Vec<TrafficSample> = samples
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(s, _)| s.clone())
        .collect();
    FeatureStats::fit(&covered)
}

#[derive(Debug, Clone)]
pub struct PointConfig {
    pub arch: Arch,
    pub train: TrainConfig,
    pub train_fraction: f64,
    pub alpha: usize,
    /// Training-window stride; None picks the architecture default.
    pub stride: Option<usize>,
}

/// Everything one evaluated point yields: the trained model, per-window test
/// metrics (before the α rule), the α-rule detection run over the whole
/// stream, and the train/detect wall-clock times.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub model: DetectorModel,
    pub train_report: TrainReport,
    pub metrics: MetricsReport,
    pub detection: DetectionRun,
    pub latency_s: Option<f64>,
    pub false_alarms: usize,
    pub train_s: f64,
    pub detect_s: f64,
}

/// Runs the full pipeline on one labeled sample stream.
pub fn evaluate_point(
    samples: &[TrafficSample],
    attack_window: Option<(f64, f64)>,
    point: &PointConfig,
) -> Result<PointOutcome> {
    let arch = point.arch;
    let stride = point.stride.unwrap_or_else(|| default_train_stride(arch));
    let all_windows = windows(samples, arch.window_len(), stride);
    if all_windows.is_empty() {
        return Err(Error::Dataset(format!(
            "stream of {} samples is shorter than one {} window",
            samples.len(),
            arch
        )));
    }
    let n_links = samples[0].per_link.len();

    let (train_windows, test_windows) =
        split_dataset(&all_windows, point.train_fraction, point.train.seed)?;
    let stats = fit_stats_on_windows(samples, &train_windows)?;

    let mut model = build_detector(arch, n_links, point.train.seed)?;
    model.stats = stats;

    let train_set = featurize_all(samples, &train_windows, arch, &model.stats)?;
    let started = Instant::now();
    let train_report = train(&mut model, &train_set, &point.train)?;
    let train_s = started.elapsed().as_secs_f64();

    // Per-window verdicts on the held-out windows, before the α rule.
    let mut predictions = Vec::with_capacity(test_windows.len());
    let mut labels = Vec::with_capacity(test_windows.len());
    for w in &test_windows {
        let input = featurize(samples, w, arch, &model.stats)?;
        let out = classify(&model, &input, w.end_timestamp)?;
        predictions.push(out.verdict);
        labels.push(Label::from_attack(w.label));
    }
    let metrics = MetricsReport::from_predictions(&predictions, &labels)?;

    let started = Instant::now();
    let detection = detect_stream(&model, samples, point.alpha)?;
    let detect_s = started.elapsed().as_secs_f64();

    let latency_s = attack_window.and_then(|(start, _)| detection.detection_latency(start));
    let false_alarms = detection.false_alarms(attack_window);

    Ok(PointOutcome {
        model,
        train_report,
        metrics,
        detection,
        latency_s,
        false_alarms,
        train_s,
        detect_s,
    })
}

/// Rebuilds the state sequence for a different α from already-classified
/// verdicts, without touching the model.
pub fn replay_alpha(
    verdicts: &[(f64, Verdict)],
    alpha: usize,
) -> Result<Vec<(f64, crate::detect::NetworkState)>> {
    let mut buffer = crate::detect::AlphaBuffer::new(alpha)?;
    Ok(verdicts
        .iter()
        .map(|&(timestamp, verdict)| (timestamp, buffer.push(verdict)))
        .collect())
}
