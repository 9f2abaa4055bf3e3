//! Adam optimizer with bias-corrected moment estimates.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
    step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Fresh state with zero moments shaped like `params`.
    pub fn new(params: &[&Tensor], learning_rate: f64) -> Self {
        AdamState {
            first_moment: params.iter().map(|p| Tensor::zeros_like(p)).collect(),
            second_moment: params.iter().map(|p| Tensor::zeros_like(p)).collect(),
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One Adam update over a parameter list. `grads` must line up with `params`
/// one-to-one, and both with the shapes the state was created from.
pub fn adam_step(params: &mut [&mut Tensor], grads: &[Tensor], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::Incompatible(format!(
            "adam_step: {} params, {} grads, state tracks {}",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    for (name, beta) in [("beta1", state.beta1), ("beta2", state.beta2)] {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidConfig(format!("{name} = {beta} must lie in (0, 1)")));
        }
    }
    for (i, p) in params.iter().enumerate() {
        if p.shape() != grads[i].shape() {
            return Err(Error::shape("adam grads", grads[i].shape(), p.shape()));
        }
        if p.shape() != state.first_moment[i].shape() {
            return Err(Error::shape("adam state", state.first_moment[i].shape(), p.shape()));
        }
    }

    state.step_count += 1;
    let t = state.step_count as f64;
    let bias1 = 1.0 - state.beta1.powf(t);
    let bias2 = 1.0 - state.beta2.powf(t);

    for ((param, grad), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(state.second_moment.iter_mut()))
    {
        let pv = param.values_mut();
        let gv = grad.values();
        let mv = m.values_mut();
        let vv = v.values_mut();
        for j in 0..pv.len() {
            mv[j] = state.beta1 * mv[j] + (1.0 - state.beta1) * gv[j];
            vv[j] = state.beta2 * vv[j] + (1.0 - state.beta2) * gv[j] * gv[j];
            let m_hat = mv[j] / bias1;
            let v_hat = vv[j] / bias2;
            pv[j] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}
