//! The three neural detectors, their featurization, and the α-consecutive
//! decision rule over per-window verdicts.

pub mod alpha;
pub mod arch;
pub mod featurize;
pub mod stream;

pub use alpha::{AlphaBuffer, NetworkState, Verdict};
pub use arch::{build_detector, classify, CnnShape, DetectorModel, DetectorOutput, Net};
pub use featurize::{ann_input_width, featurize, featurize_all, windows, Arch, FeatureStats, Window};
pub use stream::{detect_stream, DetectionRecord, DetectionRun};
