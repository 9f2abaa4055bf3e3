//! Sliding-window detection over a sample stream: classify every window
//! (stride 1), feed the verdicts through the α buffer, and emit one state
//! per evaluated window.

use crate::detect::alpha::{AlphaBuffer, NetworkState, Verdict};
use crate::detect::arch::{classify, DetectorModel};
use crate::detect::featurize::{featurize, Window};
use crate::error::{Error, Result};
use crate::sim::TrafficSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRecord {
    /// Timestamp of the window's last sample.
    pub timestamp: f64,
    pub probability: f64,
    pub verdict: Verdict,
    pub state: NetworkState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRun {
    pub records: Vec<DetectionRecord>,
    /// Set when the stream was shorter than one window, so nothing ran.
    pub insufficient_input: bool,
}

impl DetectionRun {
    pub fn states(&self) -> impl Iterator<Item = (f64, NetworkState)> + '_ {
        self.records.iter().map(|r| (r.timestamp, r.state))
    }

    /// Timestamps of NORMAL -> UNDER_ATTACK transitions.
    pub fn alarm_times(&self) -> Vec<f64> {
        alarm_times(self.states())
    }

    /// Seconds from `attack_start` to the first UNDER_ATTACK state at or
    /// after it, if any.
    pub fn detection_latency(&self, attack_start: f64) -> Option<f64> {
        detection_latency(self.states(), attack_start)
    }

    /// Alarms raised outside the attack window (or at all, when there is no
    /// window configured).
    pub fn false_alarms(&self, attack_window: Option<(f64, f64)>) -> usize {
        false_alarms(self.states(), attack_window)
    }
}

/// NORMAL -> UNDER_ATTACK transition timestamps of a state sequence.
pub fn alarm_times(states: impl Iterator<Item = (f64, NetworkState)>) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev = NetworkState::Normal;
    for (t, state) in states {
        if state.is_under_attack() && !prev.is_under_attack() {
            out.push(t);
        }
        prev = state;
    }
    out
}

/// Seconds from `attack_start` to the first UNDER_ATTACK state at or after it.
pub fn detection_latency(
    states: impl Iterator<Item = (f64, NetworkState)>,
    attack_start: f64,
) -> Option<f64> {
    states
        .into_iter()
        .find(|(t, s)| s.is_under_attack() && *t >= attack_start)
        .map(|(t, _)| t - attack_start)
}

/// Alarms raised outside the attack window (every alarm counts when no
/// window is configured).
pub fn false_alarms(
    states: impl Iterator<Item = (f64, NetworkState)>,
    attack_window: Option<(f64, f64)>,
) -> usize {
    alarm_times(states)
        .iter()
        .filter(|&&t| match attack_window {
            Some((start, end)) => t < start || t > end,
            None => true,
        })
        .count()
}

/// Slides the model's window over the stream one sample at a time. The first
/// record lands at the window-th sample; an UNDER_ATTACK state can appear at
/// the (window + α - 1)-th sample at the earliest.
pub fn detect_stream(
    model: &DetectorModel,
    samples: &[TrafficSample],
    alpha: usize,
) -> Result<DetectionRun> {
    let mut buffer = AlphaBuffer::new(alpha)?;
    let w = model.arch.window_len();
    if samples.len() < w {
        return Ok(DetectionRun {
            records: Vec::new(),
            insufficient_input: true,
        });
    }
    if samples
        .windows(2)
        .any(|pair| pair[1].timestamp < pair[0].timestamp)
    {
        return Err(Error::Dataset("samples are not ordered by timestamp".into()));
    }

    let mut records = Vec::with_capacity(samples.len() - w + 1);
    for end in w..=samples.len() {
        let window = Window {
            start: end - w,
            len: w,
            label: false,
            end_timestamp: samples[end - 1].timestamp,
        };
        let input = featurize(samples, &window, model.arch, &model.stats)?;
        let out = classify(model, &input, window.end_timestamp)?;
        let state = buffer.push(out.verdict);
        records.push(DetectionRecord {
            timestamp: out.window_end_timestamp,
            probability: out.probability,
            verdict: out.verdict,
            state,
        });
    }
    Ok(DetectionRun {
        records,
        insufficient_input: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::arch::build_detector;
    use crate::detect::featurize::{Arch, FeatureStats};
    use crate::sim::{Label, LinkStats};

    fn stream(n: usize) -> Vec<TrafficSample> {
        (0..n)
            .map(|i| TrafficSample {
                timestamp: i as f64 * 0.5,
                per_link: vec![
                    LinkStats {
                        flow_count: (i % 5) as u32,
                        aggregate_size_kbit: (i % 7) as f64 * 10.0,
                    };
                    2
                ],
                label: Label::Normal,
            })
            .collect()
    }

    #[test]
    fn short_stream_warns_and_emits_nothing() {
        let model = build_detector(Arch::Lstm, 2, 1).unwrap();
        let run = detect_stream(&model, &stream(10), 3).unwrap();
        assert!(run.insufficient_input);
        assert!(run.records.is_empty());
    }

    #[test]
    fn one_record_per_window_stride_one() {
        let samples = stream(60);
        let stats = FeatureStats::fit(&samples).unwrap();
        for arch in [Arch::Ann, Arch::Cnn, Arch::Lstm] {
            let mut model = build_detector(arch, 2, 1).unwrap();
            model.stats = stats.clone();
            let run = detect_stream(&model, &samples, 3).unwrap();
            assert!(!run.insufficient_input);
            assert_eq!(run.records.len(), 60 - arch.window_len() + 1);
            // Records carry the window-end timestamps in order.
            assert_eq!(
                run.records[0].timestamp,
                samples[arch.window_len() - 1].timestamp
            );
            assert_eq!(run.records.last().unwrap().timestamp, samples[59].timestamp);
        }
    }

    #[test]
    fn stream_states_replay_classify_plus_alpha_push() {
        let samples = stream(80);
        let stats = FeatureStats::fit(&samples).unwrap();
        let mut model = build_detector(Arch::Cnn, 2, 3).unwrap();
        model.stats = stats;
        let alpha = 4;
        let run = detect_stream(&model, &samples, alpha).unwrap();

        // Oracle replay: classify each window independently, push by hand.
        let mut buffer = AlphaBuffer::new(alpha).unwrap();
        let w = Arch::Cnn.window_len();
        for (i, end) in (w..=samples.len()).enumerate() {
            let window = Window {
                start: end - w,
                len: w,
                label: false,
                end_timestamp: samples[end - 1].timestamp,
            };
            let input = featurize(&samples, &window, Arch::Cnn, &model.stats).unwrap();
            let out = classify(&model, &input, window.end_timestamp).unwrap();
            let state = buffer.push(out.verdict);
            assert_eq!(run.records[i].probability, out.probability);
            assert_eq!(run.records[i].verdict, out.verdict);
            assert_eq!(run.records[i].state, state);
        }
    }

    #[test]
    fn alpha_one_state_equals_verdict() {
        let samples = stream(50);
        let stats = FeatureStats::fit(&samples).unwrap();
        let mut model = build_detector(Arch::Ann, 2, 5).unwrap();
        model.stats = stats;
        let run = detect_stream(&model, &samples, 1).unwrap();
        for r in &run.records {
            assert_eq!(r.state.is_under_attack(), r.verdict.is_attack());
        }
    }

    #[test]
    fn clean_model_on_normal_stream_raises_no_alarms() {
        // Head bias pushed far negative: every verdict is normal, so even
        // alpha = 1 never transitions to UNDER_ATTACK.
        let samples = stream(50);
        let stats = FeatureStats::fit(&samples).unwrap();
        let mut model = build_detector(Arch::Ann, 2, 5).unwrap();
        model.stats = stats;
        match &mut model.net {
            crate::detect::Net::Ann(net) => net.b3.values_mut()[0] = -50.0,
            _ => unreachable!(),
        }
        let run = detect_stream(&model, &samples, 1).unwrap();
        assert!(run.records.iter().all(|r| !r.verdict.is_attack()));
        assert!(run.alarm_times().is_empty());
        assert_eq!(run.false_alarms(None), 0);
    }

    #[test]
    fn unordered_samples_are_rejected() {
        let mut samples = stream(40);
        samples.swap(10, 20);
        let model = build_detector(Arch::Ann, 2, 1).unwrap();
        assert!(detect_stream(&model, &samples, 1).is_err());
    }
}
