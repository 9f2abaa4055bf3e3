//! LSTM cell and backpropagation through time over a fixed window.
//!
//! Gate order in the stacked parameter tensors is input, forget, candidate,
//! output. The candidate gate uses tanh, the rest use sigmoid:
//!
//!   c_t = f ⊙ c_{t-1} + i ⊙ g
//!   h_t = o ⊙ tanh(c_t)

use crate::error::{Error, Result};
use crate::nn::layers::sigmoid_scalar;
use crate::nn::tensor::Tensor;

/// Parameters of one LSTM cell with input width `d` and `u` hidden units.
///
/// `w_input` is `[4u, d]`, `w_hidden` is `[4u, u]`, `bias` is `[4u]`, with the
/// four gate blocks stacked in i, f, g, o order.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_input: Tensor,
    pub w_hidden: Tensor,
    pub bias: Tensor,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, units: usize) -> Self {
        LstmParams {
            w_input: Tensor::zeros(&[4 * units, input_dim]),
            w_hidden: Tensor::zeros(&[4 * units, units]),
            bias: Tensor::zeros(&[4 * units]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.shape()[1]
    }

    pub fn units(&self) -> usize {
        self.w_hidden.shape()[1]
    }

    fn validate(&self) -> Result<()> {
        let u = self.units();
        if self.w_input.shape()[0] != 4 * u {
            return Err(Error::shape(
                "lstm w_input",
                self.w_input.shape(),
                &[4 * u, self.input_dim()],
            ));
        }
        if self.w_hidden.shape() != [4 * u, u] {
            return Err(Error::shape("lstm w_hidden", self.w_hidden.shape(), &[4 * u, u]));
        }
        if self.bias.shape() != [4 * u] {
            return Err(Error::shape("lstm bias", self.bias.shape(), &[4 * u]));
        }
        Ok(())
    }
}

/// Post-activation gate values and states cached for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: Tensor,
    pub h_prev: Tensor,
    pub c_prev: Tensor,
    pub gate_i: Vec<f64>,
    pub gate_f: Vec<f64>,
    pub gate_g: Vec<f64>,
    pub gate_o: Vec<f64>,
    pub c: Tensor,
    pub tanh_c: Vec<f64>,
    pub h: Tensor,
}

/// One step of the cell. Returns `(h_t, c_t)` and the cache needed by BPTT.
pub fn lstm_cell(
    x: &Tensor,
    h_prev: &Tensor,
    c_prev: &Tensor,
    params: &LstmParams,
) -> Result<(Tensor, Tensor, LstmStepCache)> {
    params.validate()?;
    let d = params.input_dim();
    let u = params.units();
    x.expect_shape("lstm x", &[d])?;
    h_prev.expect_shape("lstm h_prev", &[u])?;
    c_prev.expect_shape("lstm c_prev", &[u])?;

    let wx = params.w_input.values();
    let wh = params.w_hidden.values();
    let b = params.bias.values();
    let xv = x.values();
    let hv = h_prev.values();

    // Pre-activations for all four gate blocks at once.
    let mut pre = vec![0.0; 4 * u];
    for (row, p) in pre.iter_mut().enumerate() {
        let mut acc = b[row];
        let wx_row = &wx[row * d..(row + 1) * d];
        for (w, xi) in wx_row.iter().zip(xv) {
            acc += w * xi;
        }
        let wh_row = &wh[row * u..(row + 1) * u];
        for (w, hi) in wh_row.iter().zip(hv) {
            acc += w * hi;
        }
        *p = acc;
    }

    let gate_i: Vec<f64> = pre[0..u].iter().map(|&v| sigmoid_scalar(v)).collect();
    let gate_f: Vec<f64> = pre[u..2 * u].iter().map(|&v| sigmoid_scalar(v)).collect();
    let gate_g: Vec<f64> = pre[2 * u..3 * u].iter().map(|&v| v.tanh()).collect();
    let gate_o: Vec<f64> = pre[3 * u..4 * u].iter().map(|&v| sigmoid_scalar(v)).collect();

    let mut c = vec![0.0; u];
    let mut tanh_c = vec![0.0; u];
    let mut h = vec![0.0; u];
    for j in 0..u {
        c[j] = gate_f[j] * c_prev.values()[j] + gate_i[j] * gate_g[j];
        tanh_c[j] = c[j].tanh();
        h[j] = gate_o[j] * tanh_c[j];
    }

    let c = Tensor::new(vec![u], c)?;
    let h = Tensor::new(vec![u], h)?;
    let cache = LstmStepCache {
        x: x.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        gate_i,
        gate_f,
        gate_g,
        gate_o,
        c: c.clone(),
        tanh_c,
        h: h.clone(),
    };
    Ok((h, c, cache))
}

/// Runs the cell over a window of inputs starting from zero states.
/// Returns the per-step caches; the final hidden state is `caches.last().h`.
pub fn lstm_window_forward(inputs: &[Tensor], params: &LstmParams) -> Result<Vec<LstmStepCache>> {
    let u = params.units();
    let mut h = Tensor::zeros(&[u]);
    let mut c = Tensor::zeros(&[u]);
    let mut caches = Vec::with_capacity(inputs.len());
    for x in inputs {
        let (nh, nc, cache) = lstm_cell(x, &h, &c, params)?;
        h = nh;
        c = nc;
        caches.push(cache);
    }
    Ok(caches)
}

/// Gradients produced by backpropagation through time.
pub struct LstmGrads {
    pub w_input: Tensor,
    pub w_hidden: Tensor,
    pub bias: Tensor,
    /// Gradient with respect to each step's input vector.
    pub inputs: Vec<Tensor>,
}

/// Backpropagation through time over a full window.
///
/// `grad_h` holds the external gradient flowing into each step's hidden state
/// (zeros for steps the loss does not read). For a final-state classifier,
/// only the last entry is non-zero; for a stacked layer, every entry is.
pub fn lstm_window_backward(
    params: &LstmParams,
    caches: &[LstmStepCache],
    grad_h: &[Tensor],
) -> Result<LstmGrads> {
    if caches.len() != grad_h.len() {
        return Err(Error::Incompatible(format!(
            "BPTT needs one upstream gradient per step: {} steps, {} gradients",
            caches.len(),
            grad_h.len()
        )));
    }
    params.validate()?;
    let d = params.input_dim();
    let u = params.units();

    let wx = params.w_input.values();
    let wh = params.w_hidden.values();

    let mut d_wx = vec![0.0; 4 * u * d];
    let mut d_wh = vec![0.0; 4 * u * u];
    let mut d_b = vec![0.0; 4 * u];
    let mut d_inputs = vec![Tensor::zeros(&[d]); caches.len()];

    // Carried gradients flowing backwards through h and c.
    let mut dh_next = vec![0.0; u];
    let mut dc_next = vec![0.0; u];

    for (t, cache) in caches.iter().enumerate().rev() {
        grad_h[t].expect_shape("lstm grad_h", &[u])?;
        // Total gradient on h_t: external plus recurrent.
        let dh: Vec<f64> = grad_h[t]
            .values()
            .iter()
            .zip(&dh_next)
            .map(|(a, b)| a + b)
            .collect();

        // dpre holds gradients on the four gate pre-activations, stacked i,f,g,o.
        let mut dpre = vec![0.0; 4 * u];
        let mut dc_prev = vec![0.0; u];
        for j in 0..u {
            let tanh_c = cache.tanh_c[j];
            let dc = dh[j] * cache.gate_o[j] * (1.0 - tanh_c * tanh_c) + dc_next[j];
            let i = cache.gate_i[j];
            let f = cache.gate_f[j];
            let g = cache.gate_g[j];
            let o = cache.gate_o[j];
            dpre[j] = dc * g * i * (1.0 - i);
            dpre[u + j] = dc * cache.c_prev.values()[j] * f * (1.0 - f);
            dpre[2 * u + j] = dc * i * (1.0 - g * g);
            dpre[3 * u + j] = dh[j] * tanh_c * o * (1.0 - o);
            dc_prev[j] = dc * f;
        }

        let xv = cache.x.values();
        let hv = cache.h_prev.values();
        let mut dx = vec![0.0; d];
        let mut dh_prev = vec![0.0; u];
        for row in 0..4 * u {
            let dp = dpre[row];
            if dp == 0.0 {
                continue;
            }
            d_b[row] += dp;
            let wx_row = &wx[row * d..(row + 1) * d];
            let dwx_row = &mut d_wx[row * d..(row + 1) * d];
            for i in 0..d {
                dwx_row[i] += dp * xv[i];
                dx[i] += dp * wx_row[i];
            }
            let wh_row = &wh[row * u..(row + 1) * u];
            let dwh_row = &mut d_wh[row * u..(row + 1) * u];
            for j in 0..u {
                dwh_row[j] += dp * hv[j];
                dh_prev[j] += dp * wh_row[j];
            }
        }

        d_inputs[t] = Tensor::new(vec![d], dx)?;
        dh_next = dh_prev;
        dc_next = dc_prev;
    }

    Ok(LstmGrads {
        w_input: Tensor::new(vec![4 * u, d], d_wx)?,
        w_hidden: Tensor::new(vec![4 * u, u], d_wh)?,
        bias: Tensor::new(vec![4 * u], d_b)?,
        inputs: d_inputs,
    })
}
