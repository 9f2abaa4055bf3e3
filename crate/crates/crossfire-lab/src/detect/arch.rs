//! The three detector architectures. All of them end in a single sigmoid
//! unit; gradients flow through the hand-derived layer backward passes with
//! the usual sigmoid-plus-cross-entropy shortcut (dz = p - y) at the head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::detect::alpha::Verdict;
use crate::detect::featurize::{ann_input_width, Arch, FeatureStats};
use crate::error::{Error, Result};
use crate::nn::init::{conv_init, dense_init, lstm_init};
use crate::nn::layers::{
    conv2d, conv2d_backward, dense, dense_backward, relu, relu_backward, sigmoid_scalar,
};
use crate::nn::loss::bce_loss;
use crate::nn::lstm::{lstm_window_backward, lstm_window_forward, LstmParams};
use crate::nn::tensor::Tensor;
use crate::nn::train::Model;

pub const ANN_HIDDEN_UNITS: usize = 25;
pub const LSTM_HIDDEN_UNITS: usize = 32;

/// Feed-forward detector: one sample in, two rectified hidden layers of 25,
/// sigmoid out.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnDetector {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub w3: Tensor,
    pub b3: Tensor,
}

impl AnnDetector {
    fn new(n_links: usize, rng: &mut ChaCha8Rng) -> Self {
        let input = ann_input_width(n_links);
        let (w1, b1) = dense_init(rng, ANN_HIDDEN_UNITS, input);
        let (w2, b2) = dense_init(rng, ANN_HIDDEN_UNITS, ANN_HIDDEN_UNITS);
        let (w3, b3) = dense_init(rng, 1, ANN_HIDDEN_UNITS);
        AnnDetector {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
        }
    }

    pub fn input_width(&self) -> usize {
        self.w1.shape()[1]
    }

    fn forward(&self, input: &Tensor) -> Result<(f64, AnnCache)> {
        input.expect_shape("ann input", &[self.input_width()])?;
        let z1 = dense(input, &self.w1, &self.b1)?;
        let a1 = relu(&z1);
        let z2 = dense(&a1, &self.w2, &self.b2)?;
        let a2 = relu(&z2);
        let z3 = dense(&a2, &self.w3, &self.b3)?;
        let p = sigmoid_scalar(z3.values()[0]);
        Ok((p, AnnCache { z1, a1, z2, a2 }))
    }

    fn backward(&self, input: &Tensor, cache: &AnnCache, dz: f64) -> Result<Vec<Tensor>> {
        let dz3 = Tensor::from_vec(vec![dz]);
        let (d_a2, d_w3, d_b3) = dense_backward(&cache.a2, &self.w3, &dz3)?;
        let dz2 = relu_backward(&cache.z2, &d_a2)?;
        let (d_a1, d_w2, d_b2) = dense_backward(&cache.a1, &self.w2, &dz2)?;
        let dz1 = relu_backward(&cache.z1, &d_a1)?;
        let (_, d_w1, d_b1) = dense_backward(input, &self.w1, &dz1)?;
        Ok(vec![d_w1, d_b1, d_w2, d_b2, d_w3, d_b3])
    }
}

struct AnnCache {
    z1: Tensor,
    a1: Tensor,
    z2: Tensor,
    a2: Tensor,
}

/// Shape knobs of the convolutional detector. Defaults: 8 temporal 1x3
/// kernels, 8 spatial kernels spanning 3 rows and the full feature width of
/// the temporal maps, then a 16-unit rectified dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnShape {
    pub window_rows: usize,
    pub temporal_kernels: usize,
    pub temporal_width: usize,
    pub spatial_kernels: usize,
    pub spatial_rows: usize,
    pub dense_units: usize,
}

impl Default for CnnShape {
    fn default() -> Self {
        CnnShape {
            window_rows: Arch::Cnn.window_len(),
            temporal_kernels: 8,
            temporal_width: 3,
            spatial_kernels: 8,
            spatial_rows: 3,
            dense_units: 16,
        }
    }
}

/// Convolutional detector over a 10x2L window: a temporal filter pass along
/// each row, then a spatial filter spanning every feature column of the
/// temporal maps, then a dense rectified layer into the sigmoid head.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnDetector {
    pub shape: CnnShape,
    pub temporal_kernels: Tensor,
    pub temporal_bias: Tensor,
    pub spatial_kernels: Tensor,
    pub spatial_bias: Tensor,
    pub dense_w: Tensor,
    pub dense_b: Tensor,
    pub out_w: Tensor,
    pub out_b: Tensor,
}

impl CnnDetector {
    fn new(n_links: usize, shape: CnnShape, rng: &mut ChaCha8Rng) -> Result<Self> {
        let feat = 2 * n_links;
        if feat < shape.temporal_width {
            return Err(Error::InvalidConfig(format!(
                "cnn needs at least {} feature columns, {n_links} links give {feat}",
                shape.temporal_width
            )));
        }
        if shape.window_rows < shape.spatial_rows {
            return Err(Error::InvalidConfig(format!(
                "cnn spatial rows {} exceed the {}-row window",
                shape.spatial_rows, shape.window_rows
            )));
        }
        let t_cols = feat - shape.temporal_width + 1;
        let s_rows = shape.window_rows - shape.spatial_rows + 1;
        let (temporal_kernels, temporal_bias) =
            conv_init(rng, shape.temporal_kernels, 1, 1, shape.temporal_width);
        let (spatial_kernels, spatial_bias) = conv_init(
            rng,
            shape.spatial_kernels,
            shape.temporal_kernels,
            shape.spatial_rows,
            t_cols,
        );
        let flat = shape.spatial_kernels * s_rows;
        let (dense_w, dense_b) = dense_init(rng, shape.dense_units, flat);
        let (out_w, out_b) = dense_init(rng, 1, shape.dense_units);
        Ok(CnnDetector {
            shape,
            temporal_kernels,
            temporal_bias,
            spatial_kernels,
            spatial_bias,
            dense_w,
            dense_b,
            out_w,
            out_b,
        })
    }

    pub fn feature_width(&self) -> usize {
        self.temporal_kernels.shape()[2] + self.spatial_kernels.shape()[3] - 1
    }

    fn forward(&self, input: &Tensor) -> Result<(f64, CnnCache)> {
        input.expect_shape("cnn input", &[self.shape.window_rows, self.feature_width()])?;
        let z_t = conv2d(input, &self.temporal_kernels, &self.temporal_bias)?;
        let a_t = relu(&z_t);
        let z_s = conv2d(&a_t, &self.spatial_kernels, &self.spatial_bias)?;
        let a_s = relu(&z_s);
        let flat = a_s.clone().reshape(vec![a_s.len()])?;
        let z_d = dense(&flat, &self.dense_w, &self.dense_b)?;
        let a_d = relu(&z_d);
        let z_o = dense(&a_d, &self.out_w, &self.out_b)?;
        let p = sigmoid_scalar(z_o.values()[0]);
        Ok((
            p,
            CnnCache {
                z_t,
                a_t,
                z_s,
                flat,
                z_d,
                a_d,
            },
        ))
    }

    fn backward(&self, input: &Tensor, cache: &CnnCache, dz: f64) -> Result<Vec<Tensor>> {
        let dz_o = Tensor::from_vec(vec![dz]);
        let (d_ad, d_out_w, d_out_b) = dense_backward(&cache.a_d, &self.out_w, &dz_o)?;
        let d_zd = relu_backward(&cache.z_d, &d_ad)?;
        let (d_flat, d_dense_w, d_dense_b) = dense_backward(&cache.flat, &self.dense_w, &d_zd)?;
        let d_as = d_flat.reshape(cache.z_s.shape().to_vec())?;
        let d_zs = relu_backward(&cache.z_s, &d_as)?;
        let (d_at, d_sk, d_sb) = conv2d_backward(&cache.a_t, &self.spatial_kernels, &d_zs)?;
        let d_zt = relu_backward(&cache.z_t, &d_at)?;
        let (_, d_tk, d_tb) = conv2d_backward(input, &self.temporal_kernels, &d_zt)?;
        Ok(vec![d_tk, d_tb, d_sk, d_sb, d_dense_w, d_dense_b, d_out_w, d_out_b])
    }
}

struct CnnCache {
    z_t: Tensor,
    a_t: Tensor,
    z_s: Tensor,
    flat: Tensor,
    z_d: Tensor,
    a_d: Tensor,
}

/// Two stacked 32-unit LSTM layers read the window; the final hidden state of
/// the upper layer feeds the sigmoid head.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmDetector {
    pub layer1: LstmParams,
    pub layer2: LstmParams,
    pub head_w: Tensor,
    pub head_b: Tensor,
    pub window_steps: usize,
}

impl LstmDetector {
    fn new(n_links: usize, rng: &mut ChaCha8Rng) -> Self {
        let d = 2 * n_links;
        LstmDetector {
            layer1: lstm_init(rng, d, LSTM_HIDDEN_UNITS),
            layer2: lstm_init(rng, LSTM_HIDDEN_UNITS, LSTM_HIDDEN_UNITS),
            head_w: dense_init(rng, 1, LSTM_HIDDEN_UNITS).0,
            head_b: Tensor::zeros(&[1]),
            window_steps: Arch::Lstm.window_len(),
        }
    }

    pub fn step_width(&self) -> usize {
        self.layer1.input_dim()
    }

    fn split_steps(&self, input: &Tensor) -> Result<Vec<Tensor>> {
        input.expect_shape("lstm input", &[self.window_steps, self.step_width()])?;
        let d = self.step_width();
        Ok((0..self.window_steps)
            .map(|t| {
                Tensor::new(vec![d], input.values()[t * d..(t + 1) * d].to_vec())
                    .expect("row slice has the right length")
            })
            .collect())
    }

    fn forward(&self, input: &Tensor) -> Result<(f64, LstmCache)> {
        let steps = self.split_steps(input)?;
        let caches1 = lstm_window_forward(&steps, &self.layer1)?;
        let hidden1: Vec<Tensor> = caches1.iter().map(|c| c.h.clone()).collect();
        let caches2 = lstm_window_forward(&hidden1, &self.layer2)?;
        let final_h = caches2.last().expect("window has steps").h.clone();
        let z = dense(&final_h, &self.head_w, &self.head_b)?;
        let p = sigmoid_scalar(z.values()[0]);
        Ok((
            p,
            LstmCache {
                caches1,
                caches2,
                final_h,
            },
        ))
    }

    fn backward(&self, cache: &LstmCache, dz: f64) -> Result<Vec<Tensor>> {
        let u = LSTM_HIDDEN_UNITS;
        let dz_t = Tensor::from_vec(vec![dz]);
        let (d_h, d_head_w, d_head_b) = dense_backward(&cache.final_h, &self.head_w, &dz_t)?;

        let mut grad_h2 = vec![Tensor::zeros(&[u]); cache.caches2.len()];
        *grad_h2.last_mut().expect("window has steps") = d_h;
        let g2 = lstm_window_backward(&self.layer2, &cache.caches2, &grad_h2)?;

        // Layer 2's input gradients are layer 1's per-step hidden gradients.
        let g1 = lstm_window_backward(&self.layer1, &cache.caches1, &g2.inputs)?;

        Ok(vec![
            g1.w_input, g1.w_hidden, g1.bias, g2.w_input, g2.w_hidden, g2.bias, d_head_w,
            d_head_b,
        ])
    }
}

struct LstmCache {
    caches1: Vec<crate::nn::lstm::LstmStepCache>,
    caches2: Vec<crate::nn::lstm::LstmStepCache>,
    final_h: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Net {
    Ann(AnnDetector),
    Cnn(CnnDetector),
    Lstm(LstmDetector),
}

/// A detector: architecture, link count, preprocessing statistics, decision
/// threshold, and the network parameters. Immutable once trained or loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub arch: Arch,
    pub n_links: usize,
    pub threshold: f64,
    pub stats: FeatureStats,
    pub net: Net,
}

/// Classification result for one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorOutput {
    pub probability: f64,
    pub verdict: Verdict,
    pub window_end_timestamp: f64,
}

/// Freshly initialized model of the exact layer shapes the architecture
/// prescribes for `n_links` monitored links. Deterministic per seed.
pub fn build_detector(arch: Arch, n_links: usize, seed: u64) -> Result<DetectorModel> {
    build_detector_with(arch, n_links, seed, CnnShape::default())
}

/// `build_detector` with explicit CNN shape knobs (ignored by the other
/// architectures).
pub fn build_detector_with(
    arch: Arch,
    n_links: usize,
    seed: u64,
    cnn_shape: CnnShape,
) -> Result<DetectorModel> {
    if n_links == 0 {
        return Err(Error::InvalidConfig("need at least one monitored link".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = match arch {
        Arch::Ann => Net::Ann(AnnDetector::new(n_links, &mut rng)),
        Arch::Cnn => Net::Cnn(CnnDetector::new(n_links, cnn_shape, &mut rng)?),
        Arch::Lstm => Net::Lstm(LstmDetector::new(n_links, &mut rng)),
    };
    Ok(DetectorModel {
        arch,
        n_links,
        threshold: 0.5,
        stats: FeatureStats {
            ranges: vec![(0.0, 1.0); 1 + 2 * n_links],
        },
        net,
    })
}

/// Pure classification of one featurized window.
pub fn classify(
    model: &DetectorModel,
    input: &Tensor,
    window_end_timestamp: f64,
) -> Result<DetectorOutput> {
    let probability = model.predict(input)?;
    let verdict = if probability >= model.threshold {
        Verdict::Attack
    } else {
        Verdict::Normal
    };
    Ok(DetectorOutput {
        probability,
        verdict,
        window_end_timestamp,
    })
}

impl DetectorModel {
    /// Names for the parameter tensors, aligned with `params()` order.
    pub fn param_names(&self) -> Vec<&'static str> {
        match &self.net {
            Net::Ann(_) => vec![
                "hidden1.weights",
                "hidden1.bias",
                "hidden2.weights",
                "hidden2.bias",
                "output.weights",
                "output.bias",
            ],
            Net::Cnn(_) => vec![
                "temporal.kernels",
                "temporal.bias",
                "spatial.kernels",
                "spatial.bias",
                "dense.weights",
                "dense.bias",
                "output.weights",
                "output.bias",
            ],
            Net::Lstm(_) => vec![
                "lstm1.w_input",
                "lstm1.w_hidden",
                "lstm1.bias",
                "lstm2.w_input",
                "lstm2.w_hidden",
                "lstm2.bias",
                "output.weights",
                "output.bias",
            ],
        }
    }
}

impl Model for DetectorModel {
    fn predict(&self, input: &Tensor) -> Result<f64> {
        Ok(match &self.net {
            Net::Ann(net) => net.forward(input)?.0,
            Net::Cnn(net) => net.forward(input)?.0,
            Net::Lstm(net) => net.forward(input)?.0,
        })
    }

    fn loss_and_grads(&self, input: &Tensor, label: f64) -> Result<(f64, Vec<Tensor>)> {
        match &self.net {
            Net::Ann(net) => {
                let (p, cache) = net.forward(input)?;
                let (loss, _) = bce_loss(p, label);
                Ok((loss, net.backward(input, &cache, p - label)?))
            }
            Net::Cnn(net) => {
                let (p, cache) = net.forward(input)?;
                let (loss, _) = bce_loss(p, label);
                Ok((loss, net.backward(input, &cache, p - label)?))
            }
            Net::Lstm(net) => {
                let (p, cache) = net.forward(input)?;
                let (loss, _) = bce_loss(p, label);
                Ok((loss, net.backward(&cache, p - label)?))
            }
        }
    }

    fn params(&self) -> Vec<&Tensor> {
        match &self.net {
            Net::Ann(n) => vec![&n.w1, &n.b1, &n.w2, &n.b2, &n.w3, &n.b3],
            Net::Cnn(n) => vec![
                &n.temporal_kernels,
                &n.temporal_bias,
                &n.spatial_kernels,
                &n.spatial_bias,
                &n.dense_w,
                &n.dense_b,
                &n.out_w,
                &n.out_b,
            ],
            Net::Lstm(n) => vec![
                &n.layer1.w_input,
                &n.layer1.w_hidden,
                &n.layer1.bias,
                &n.layer2.w_input,
                &n.layer2.w_hidden,
                &n.layer2.bias,
                &n.head_w,
                &n.head_b,
            ],
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match &mut self.net {
            Net::Ann(n) => vec![
                &mut n.w1,
                &mut n.b1,
                &mut n.w2,
                &mut n.b2,
                &mut n.w3,
                &mut n.b3,
            ],
            Net::Cnn(n) => vec![
                &mut n.temporal_kernels,
                &mut n.temporal_bias,
                &mut n.spatial_kernels,
                &mut n.spatial_bias,
                &mut n.dense_w,
                &mut n.dense_b,
                &mut n.out_w,
                &mut n.out_b,
            ],
            Net::Lstm(n) => vec![
                &mut n.layer1.w_input,
                &mut n.layer1.w_hidden,
                &mut n.layer1.bias,
                &mut n.layer2.w_input,
                &mut n.layer2.w_hidden,
                &mut n.layer2.bias,
                &mut n.head_w,
                &mut n.head_b,
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::relative_error;
    use rand::Rng;

    #[test]
    fn ann_at_24_links_has_the_canonical_50_inputs() {
        let model = build_detector(Arch::Ann, 24, 1).unwrap();
        match &model.net {
            Net::Ann(net) => {
                assert_eq!(net.w1.shape(), &[25, 50]);
                assert_eq!(net.w2.shape(), &[25, 25]);
                assert_eq!(net.w3.shape(), &[1, 25]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn lstm_at_25_links_consumes_50_wide_steps() {
        let model = build_detector(Arch::Lstm, 25, 1).unwrap();
        match &model.net {
            Net::Lstm(net) => {
                assert_eq!(net.step_width(), 50);
                assert_eq!(net.window_steps, 32);
                assert_eq!(net.layer1.units(), 32);
                assert_eq!(net.layer2.units(), 32);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn cnn_consumes_ten_by_2l() {
        let model = build_detector(Arch::Cnn, 25, 1).unwrap();
        match &model.net {
            Net::Cnn(net) => {
                assert_eq!(net.feature_width(), 50);
                assert_eq!(net.shape.window_rows, 10);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn same_seed_same_initial_parameters() {
        for arch in [Arch::Ann, Arch::Cnn, Arch::Lstm] {
            let a = build_detector(arch, 5, 77).unwrap();
            let b = build_detector(arch, 5, 77).unwrap();
            assert_eq!(a, b, "{arch} init diverged");
            let c = build_detector(arch, 5, 78).unwrap();
            assert_ne!(a, c, "{arch} ignored its seed");
        }
    }

    #[test]
    fn zeroed_network_sits_on_the_decision_boundary() {
        let mut model = build_detector(Arch::Ann, 3, 1).unwrap();
        for p in model.params_mut() {
            for v in p.values_mut() {
                *v = 0.0;
            }
        }
        let input = Tensor::from_vec(vec![0.3; 7]);
        let out = classify(&model, &input, 12.5).unwrap();
        assert_eq!(out.probability, 0.5);
        assert_eq!(out.verdict, Verdict::Attack, "0.5 >= threshold counts as attack");
        assert_eq!(out.window_end_timestamp, 12.5);
    }

    #[test]
    fn classification_is_pure() {
        let model = build_detector(Arch::Cnn, 3, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let input = Tensor::new(
            vec![10, 6],
            (0..60).map(|_| rng.gen_range(0.0..1.0)).collect(),
        )
        .unwrap();
        let a = classify(&model, &input, 1.0).unwrap();
        let b = classify(&model, &input, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn verdict_tracks_threshold_consistency() {
        let model = build_detector(Arch::Ann, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let input = Tensor::from_vec((0..5).map(|_| rng.gen_range(0.0..1.0)).collect());
            let out = classify(&model, &input, 0.0).unwrap();
            assert_eq!(out.verdict.is_attack(), out.probability >= 0.5);
        }
    }

    #[test]
    fn mismatched_input_is_a_shape_error() {
        let model = build_detector(Arch::Lstm, 4, 1).unwrap();
        let input = Tensor::zeros(&[32, 6]);
        match model.predict(&input) {
            Err(Error::ShapeMismatch { .. }) => {}
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    /// Spot-checks the full-model loss gradient on a random subset of
    /// coordinates of every parameter tensor.
    fn check_model_grads(arch: Arch, n_links: usize, input: Tensor, tol: f64) {
        let mut model = build_detector(arch, n_links, 5).unwrap();
        let label = 1.0;
        let (_, grads) = model.loss_and_grads(&input, label).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let eps = 1e-5;
        for (pi, grad) in grads.iter().enumerate() {
            let len = grad.len();
            let picks: Vec<usize> = (0..len.min(6)).map(|_| rng.gen_range(0..len)).collect();
            for &ci in &picks {
                let analytic = grad.values()[ci];
                let base = model.params()[pi].values()[ci];
                let mut eval = |v: f64| {
                    model.params_mut()[pi].values_mut()[ci] = v;
                    model.loss_and_grads(&input, label).unwrap().0
                };
                let plus = eval(base + eps);
                let minus = eval(base - eps);
                model.params_mut()[pi].values_mut()[ci] = base;
                let numeric = (plus - minus) / (2.0 * eps);
                let err = relative_error(analytic, numeric);
                assert!(err < tol, "{arch} param {pi} coord {ci}: err {err}");
            }
        }
    }

    #[test]
    fn ann_model_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let input = Tensor::from_vec((0..5).map(|_| rng.gen_range(0.0..1.0)).collect());
        check_model_grads(Arch::Ann, 2, input, 1e-5);
    }

    #[test]
    fn cnn_model_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let input = Tensor::new(
            vec![10, 4],
            (0..40).map(|_| rng.gen_range(0.0..1.0)).collect(),
        )
        .unwrap();
        check_model_grads(Arch::Cnn, 2, input, 1e-5);
    }

    #[test]
    fn lstm_model_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let input = Tensor::new(
            vec![32, 2],
            (0..64).map(|_| rng.gen_range(0.0..1.0)).collect(),
        )
        .unwrap();
        check_model_grads(Arch::Lstm, 1, input, 1e-4);
    }
}
