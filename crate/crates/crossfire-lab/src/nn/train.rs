//! Mini-batch Adam training loop with early stopping on validation loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::adam::{adam_step, AdamState};
use crate::nn::tensor::Tensor;

/// A trainable binary classifier: one probability out, hand-derived gradients.
pub trait Model {
    /// Probability of the positive class for one input.
    fn predict(&self, input: &Tensor) -> Result<f64>;

    /// Binary cross-entropy loss for one labeled input together with the
    /// gradient of that loss for every parameter, in `params()` order.
    fn loss_and_grads(&self, input: &Tensor, label: f64) -> Result<(f64, Vec<Tensor>)>;

    fn params(&self) -> Vec<&Tensor>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    /// Fraction of the dataset held out for the stopping signal, in [0, 1).
    /// With 0, the training loss is monitored instead.
    pub validation_fraction: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 40,
            batch_size: 32,
            patience: 10,
            validation_fraction: 0.2,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::InvalidConfig("patience must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidConfig(format!(
                "validation_fraction must be in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be >= 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub history: Vec<EpochLoss>,
    /// Epoch whose parameters the model now carries.
    pub best_epoch: usize,
}

fn fisher_yates<T>(v: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.gen_range(0..=i);
        v.swap(i, j);
    }
}

/// Trains `model` in place and leaves it holding the parameters of the best
/// validation epoch. Deterministic for a fixed config (including seed).
pub fn train<M: Model>(
    model: &mut M,
    dataset: &[(Tensor, f64)],
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Dataset("cannot train on an empty dataset".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    fisher_yates(&mut indices, &mut rng);

    let n_val = if config.validation_fraction > 0.0 {
        let v = (config.validation_fraction * dataset.len() as f64).round() as usize;
        let v = v.max(1);
        if v >= dataset.len() {
            return Err(Error::Dataset(format!(
                "validation fraction {} leaves no training samples for {} total",
                config.validation_fraction,
                dataset.len()
            )));
        }
        v
    } else {
        0
    };
    let (train_idx, val_idx) = indices.split_at(dataset.len() - n_val);
    let mut train_idx = train_idx.to_vec();

    let mut adam = {
        let params = model.params();
        AdamState::new(&params, config.learning_rate)
    };

    let mut history = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_params: Vec<Tensor> = model.params().into_iter().cloned().collect();
    let mut stale_epochs = 0;

    for epoch in 1..=config.max_epochs {
        fisher_yates(&mut train_idx, &mut rng);

        let mut epoch_loss = 0.0;
        for batch in train_idx.chunks(config.batch_size) {
            let mut batch_grads: Option<Vec<Tensor>> = None;
            let mut batch_loss = 0.0;
            for &i in batch {
                let (input, label) = &dataset[i];
                let (loss, grads) = model.loss_and_grads(input, *label)?;
                batch_loss += loss;
                match &mut batch_grads {
                    None => batch_grads = Some(grads),
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&grads) {
                            a.add_in_place(g)?;
                        }
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            let mut grads = batch_grads.expect("chunks are never empty");
            for g in &mut grads {
                g.scale_in_place(scale);
            }
            epoch_loss += batch_loss;
            let mut params = model.params_mut();
            adam_step(&mut params, &grads, &mut adam)?;
        }
        let train_loss = epoch_loss / train_idx.len() as f64;

        let val_loss = if n_val > 0 {
            let mut acc = 0.0;
            for &i in val_idx {
                let (input, label) = &dataset[i];
                let p = model.predict(input)?;
                acc += crate::nn::loss::bce_loss(p, *label).0;
            }
            acc / n_val as f64
        } else {
            train_loss
        };

        history.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });

        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params = model.params().into_iter().cloned().collect();
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }

    // Restore the best validation epoch's parameters.
    for (param, best) in model.params_mut().into_iter().zip(best_params) {
        *param = best;
    }

    Ok(TrainReport {
        history,
        best_epoch,
    })
}
