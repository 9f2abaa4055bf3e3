//! Feature extraction: min-max scaling against training statistics, sliding
//! windows over the sample stream, and the per-architecture input layout.
//!
//! Raw features per sample are `[timestamp, link0_flows, link0_size, ...]`,
//! 1 + 2L in total. The ANN consumes all of them for a single sample; the
//! CNN and LSTM drop the timestamp column and let row order carry time.

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::sim::TrafficSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arch {
    Ann,
    Cnn,
    Lstm,
}

impl Arch {
    /// Samples one classification window consumes.
    pub fn window_len(self) -> usize {
        match self {
            Arch::Ann => 1,
            Arch::Cnn => 10,
            Arch::Lstm => 32,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arch::Ann => "ann",
            Arch::Cnn => "cnn",
            Arch::Lstm => "lstm",
        }
    }

    pub fn parse(s: &str) -> Result<Arch> {
        match s {
            "ann" => Ok(Arch::Ann),
            "cnn" => Ok(Arch::Cnn),
            "lstm" => Ok(Arch::Lstm),
            other => Err(Error::InvalidConfig(format!(
                "unknown architecture '{other}' (expected ann, cnn or lstm)"
            ))),
        }
    }
}

impl std::fmt::Display for Arch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-feature (min, max) fitted on training data and stored with the model.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    /// Length 1 + 2L: timestamp first, then per-link (flows, size) pairs.
    pub ranges: Vec<(f64, f64)>,
}

impl FeatureStats {
    pub fn n_links(&self) -> usize {
        (self.ranges.len() - 1) / 2
    }

    /// Fits ranges over every sample in the slice.
    pub fn fit(samples: &[TrafficSample]) -> Result<FeatureStats> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Dataset("cannot fit statistics on no samples".into()))?;
        let width = 1 + 2 * first.per_link.len();
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); width];
        let mut raw = vec![0.0; width];
        for sample in samples {
            raw_features(sample, &mut raw)?;
            for (range, &v) in ranges.iter_mut().zip(&raw) {
                range.0 = range.0.min(v);
                range.1 = range.1.max(v);
            }
        }
        Ok(FeatureStats { ranges })
    }

    /// Min-max scaling to [0, 1]; values outside the training range clamp,
    /// and a degenerate range (min = max) maps to 0.
    #[inline]
    pub fn scale(&self, index: usize, value: f64) -> f64 {
        let (lo, hi) = self.ranges[index];
        if hi > lo {
            ((value - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Writes the raw feature vector of one sample into `out`.
fn raw_features(sample: &TrafficSample, out: &mut [f64]) -> Result<()> {
    let width = 1 + 2 * sample.per_link.len();
    if out.len() != width {
        return Err(Error::Incompatible(format!(
            "feature width {} does not match sample width {width}",
            out.len()
        )));
    }
    out[0] = sample.timestamp;
    for (i, link) in sample.per_link.iter().enumerate() {
        out[1 + 2 * i] = link.flow_count as f64;
        out[2 + 2 * i] = link.aggregate_size_kbit;
    }
    Ok(())
}

/// One labeled classification window over the sample stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    /// Index of the first sample in the stream.
    pub start: usize,
    pub len: usize,
    /// Ground truth: attack when at least half the member samples are attack.
    pub label: bool,
    pub end_timestamp: f64,
}

/// Slides a window of `len` samples over the stream with the given stride.
pub fn windows(samples: &[TrafficSample], len: usize, stride: usize) -> Vec<Window> {
    assert!(len >= 1 && stride >= 1);
    let mut out = Vec::new();
    if samples.len() < len {
        return out;
    }
    let mut start = 0;
    while start + len <= samples.len() {
        let members = &samples[start..start + len];
        let attack_count = members.iter().filter(|s| s.label.is_attack()).count();
        out.push(Window {
            start,
            len,
            label: 2 * attack_count >= len,
            end_timestamp: members[members.len() - 1].timestamp,
        });
        start += stride;
    }
    out
}

/// ANN input width for L links: timestamp plus 2L link features, padded with
/// one constant-zero node when that lands on 49 so the canonical 50-node
/// layout holds at L = 24.
pub fn ann_input_width(n_links: usize) -> usize {
    let w = 1 + 2 * n_links;
    if w == 49 {
        50
    } else {
        w
    }
}

/// Builds the model input tensor for the window starting at `window.start`.
///
/// ANN: `[ann_input_width]` vector from the window's last sample, scaled
/// timestamp first. CNN: `[len, 2L]` matrix. LSTM: `[len, 2L]` sequence.
pub fn featurize(
    samples: &[TrafficSample],
    window: &Window,
    arch: Arch,
    stats: &FeatureStats,
) -> Result<Tensor> {
    let need = arch.window_len();
    if window.len < need || window.start + window.len > samples.len() {
        return Err(Error::Incompatible(format!(
            "{arch} needs a window of {need} samples, got {} of a {}-sample stream",
            window.len,
            samples.len()
        )));
    }
    let members = &samples[window.start..window.start + window.len];
    let n_links = stats.n_links();
    if members[0].per_link.len() != n_links {
        return Err(Error::Incompatible(format!(
            "model expects {n_links} links, dataset has {}",
            members[0].per_link.len()
        )));
    }
    let raw_width = 1 + 2 * n_links;
    let mut raw = vec![0.0; raw_width];

    match arch {
        Arch::Ann => {
            let sample = members.last().expect("window is non-empty");
            raw_features(sample, &mut raw)?;
            let mut values = Vec::with_capacity(ann_input_width(n_links));
            for (i, &v) in raw.iter().enumerate() {
                values.push(stats.scale(i, v));
            }
            while values.len() < ann_input_width(n_links) {
                values.push(0.0);
            }
            Tensor::new(vec![values.len()], values)
        }
        Arch::Cnn | Arch::Lstm => {
            let mut values = Vec::with_capacity(window.len * 2 * n_links);
            for sample in members {
                raw_features(sample, &mut raw)?;
                for (i, &v) in raw.iter().enumerate().skip(1) {
                    values.push(stats.scale(i, v));
                }
            }
            Tensor::new(vec![window.len, 2 * n_links], values)
        }
    }
}

/// Materializes `(input, label)` pairs for training from a window list.
pub fn featurize_all(
    samples: &[TrafficSample],
    windows: &[Window],
    arch: Arch,
    stats: &FeatureStats,
) -> Result<Vec<(Tensor, f64)>> {
    windows
        .iter()
        .map(|w| Ok((featurize(samples, w, arch, stats)?, if w.label { 1.0 } else { 0.0 })))
        .collect()
}
