//! Minimal neural-network engine: tensors, dense/conv/LSTM layers with
//! hand-derived backward passes, binary cross-entropy, Adam, a training loop
//! with early stopping, and finite-difference gradient verification.

pub mod adam;
pub mod gradcheck;
pub mod init;
pub mod layers;
pub mod loss;
pub mod lstm;
pub mod tensor;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use tensor::Tensor;
pub use train::{train, EpochLoss, Model, TrainConfig, TrainReport};
