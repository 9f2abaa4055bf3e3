//! Desk-scale laboratory for coordinated link-flooding attacks on a
//! software-defined ITS network: a deterministic traffic simulator, three
//! from-scratch neural detectors (ANN, CNN, stacked LSTM), a consecutive-
//! verdict alarm rule, and the evaluation harness that ties them together.

pub mod cli;
pub mod detect;
pub mod error;
pub mod eval;
pub mod fmt;
pub mod nn;
pub mod sim;

pub use error::{Error, Result};
