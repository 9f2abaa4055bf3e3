//! Weight initialization. Glorot-uniform for dense and convolution kernels,
//! zero biases except the LSTM forget gate, which starts at 1.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::nn::lstm::LstmParams;
use crate::nn::tensor::Tensor;

/// Uniform in ±sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let values = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::new(shape.to_vec(), values).expect("init shape is well-formed")
}

pub fn dense_init(rng: &mut ChaCha8Rng, n_out: usize, n_in: usize) -> (Tensor, Tensor) {
    let weights = glorot_uniform(rng, &[n_out, n_in], n_in, n_out);
    (weights, Tensor::zeros(&[n_out]))
}

/// Kernels `[k, kh, kw]` (or `[k, c, kh, kw]` when `channels > 1`) plus zero bias.
pub fn conv_init(
    rng: &mut ChaCha8Rng,
    kernels: usize,
    channels: usize,
    kh: usize,
    kw: usize,
) -> (Tensor, Tensor) {
    let fan_in = channels * kh * kw;
    let fan_out = kernels * kh * kw;
    let shape: Vec<usize> = if channels == 1 {
        vec![kernels, kh, kw]
    } else {
        vec![kernels, channels, kh, kw]
    };
    let weights = glorot_uniform(rng, &shape, fan_in, fan_out);
    (weights, Tensor::zeros(&[kernels]))
}

/// LSTM parameters with the forget-gate bias block set to 1.
pub fn lstm_init(rng: &mut ChaCha8Rng, input_dim: usize, units: usize) -> LstmParams {
    let w_input = glorot_uniform(rng, &[4 * units, input_dim], input_dim, units);
    let w_hidden = glorot_uniform(rng, &[4 * units, units], units, units);
    let mut bias = Tensor::zeros(&[4 * units]);
    for j in 0..units {
        bias.values_mut()[units + j] = 1.0;
    }
    LstmParams {
        w_input,
        w_hidden,
        bias,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn same_seed_same_weights() {
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        let (wa, _) = dense_init(&mut a, 25, 50);
        let (wb, _) = dense_init(&mut b, 25, 50);
        assert_eq!(wa, wb);
    }

    #[test]
    fn glorot_bound_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = glorot_uniform(&mut rng, &[100], 10, 10);
        let bound = (6.0 / 20.0_f64).sqrt();
        assert!(t.values().iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn lstm_forget_bias_starts_open() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = lstm_init(&mut rng, 5, 3);
        for j in 0..3 {
            assert_eq!(p.bias.values()[3 + j], 1.0);
            assert_eq!(p.bias.values()[j], 0.0);
        }
    }
}
