//! Forward and backward passes for the layers the detectors are built from.
//!
//! Backward passes are hand-derived per layer; there is no computation-graph
//! autodiff here. Each pair is verified against central finite differences in
//! the tests and in the acceptance suite.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// Fully-connected layer: `out[j] = sum_i weights[j,i] * input[i] + bias[j]`.
///
/// `weights` is `[n_out, n_in]`, `bias` is `[n_out]`, `input` is `[n_in]`.
pub fn dense(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n_out, n_in) = dense_dims(weights, bias)?;
    if input.shape() != [n_in] {
        return Err(Error::shape("dense input", input.shape(), &[n_in]));
    }
    let x = input.values();
    let w = weights.values();
    let mut out = bias.values().to_vec();
    for j in 0..n_out {
        let row = &w[j * n_in..(j + 1) * n_in];
        let mut acc = 0.0;
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        out[j] += acc;
    }
    Tensor::new(vec![n_out], out)
}

/// Gradients of the dense layer. Returns `(d_input, d_weights, d_bias)`.
pub fn dense_backward(
    input: &Tensor,
    weights: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let n_out = weights.shape()[0];
    let n_in = weights.shape()[1];
    if grad_out.shape() != [n_out] {
        return Err(Error::shape("dense grad_out", grad_out.shape(), &[n_out]));
    }
    if input.shape() != [n_in] {
        return Err(Error::shape("dense input", input.shape(), &[n_in]));
    }
    let x = input.values();
    let w = weights.values();
    let g = grad_out.values();

    let mut d_input = vec![0.0; n_in];
    let mut d_weights = vec![0.0; n_out * n_in];
    for j in 0..n_out {
        let gj = g[j];
        let row = &w[j * n_in..(j + 1) * n_in];
        let d_row = &mut d_weights[j * n_in..(j + 1) * n_in];
        for i in 0..n_in {
            d_input[i] += gj * row[i];
            d_row[i] = gj * x[i];
        }
    }
    Ok((
        Tensor::new(vec![n_in], d_input)?,
        Tensor::new(vec![n_out, n_in], d_weights)?,
        Tensor::new(vec![n_out], g.to_vec())?,
    ))
}

fn dense_dims(weights: &Tensor, bias: &Tensor) -> Result<(usize, usize)> {
    if weights.rank() != 2 {
        return Err(Error::shape("dense weights", weights.shape(), &[0, 0]));
    }
    let n_out = weights.shape()[0];
    let n_in = weights.shape()[1];
    if bias.shape() != [n_out] {
        return Err(Error::shape("dense bias", bias.shape(), &[n_out]));
    }
    Ok((n_out, n_in))
}

/// Elementwise rectifier, `max(0, x)`. Subgradient at 0 is 0.
pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if x.shape() != grad_out.shape() {
        return Err(Error::shape("relu grad", grad_out.shape(), x.shape()));
    }
    Tensor::new(
        x.shape().to_vec(),
        x.values()
            .iter()
            .zip(grad_out.values())
            .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
            .collect(),
    )
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    // Split on sign to avoid overflow in exp for large |x|; clamp away the
    // saturated endpoints so outputs stay strictly inside (0, 1) even when
    // the rounded quotient would land on 0.0 or 1.0.
    let y = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Elementwise logistic sigmoid. Outputs lie strictly in (0, 1).
pub fn sigmoid(x: &Tensor) -> Tensor {
    x.map(sigmoid_scalar)
}

/// Backward pass given the sigmoid *output*: dx = y(1-y) * dy.
pub fn sigmoid_backward(output: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if output.shape() != grad_out.shape() {
        return Err(Error::shape("sigmoid grad", grad_out.shape(), output.shape()));
    }
    Tensor::new(
        output.shape().to_vec(),
        output
            .values()
            .iter()
            .zip(grad_out.values())
            .map(|(&y, &g)| y * (1.0 - y) * g)
            .collect(),
    )
}

pub fn tanh_act(x: &Tensor) -> Tensor {
    x.map(f64::tanh)
}

/// Backward pass given the tanh *output*: dx = (1 - y^2) * dy.
pub fn tanh_backward(output: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if output.shape() != grad_out.shape() {
        return Err(Error::shape("tanh grad", grad_out.shape(), output.shape()));
    }
    Tensor::new(
        output.shape().to_vec(),
        output
            .values()
            .iter()
            .zip(grad_out.values())
            .map(|(&y, &g)| (1.0 - y * y) * g)
            .collect(),
    )
}

/// Valid-padding, stride-1 cross-correlation.
///
/// `input` is `[H, W]` (single channel) or `[C, H, W]`; `kernels` is
/// `[K, kh, kw]` (single input channel) or `[K, C, kh, kw]`; `bias` is `[K]`.
/// Output is `[K, H - kh + 1, W - kw + 1]`.
pub fn conv2d(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let d = ConvDims::resolve(input, kernels, bias)?;
    let (c, h, w) = (d.channels, d.height, d.width);
    let (k, kh, kw) = (d.n_kernels, d.k_height, d.k_width);
    let (oh, ow) = (d.out_height, d.out_width);

    let x = input.values();
    let ker = kernels.values();
    let mut out = vec![0.0; k * oh * ow];
    for ki in 0..k {
        let b = bias.values()[ki];
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = b;
                for ci in 0..c {
                    for py in 0..kh {
                        let x_row = &x[ci * h * w + (oy + py) * w + ox..];
                        let k_row = &ker[ki * c * kh * kw + ci * kh * kw + py * kw..];
                        for px in 0..kw {
                            acc += k_row[px] * x_row[px];
                        }
                    }
                }
                out[ki * oh * ow + oy * ow + ox] = acc;
            }
        }
    }
    Tensor::new(vec![k, oh, ow], out)
}

/// Gradients of `conv2d`. Returns `(d_input, d_kernels, d_bias)`; `d_input`
/// has the input's original shape (rank 2 stays rank 2).
pub fn conv2d_backward(
    input: &Tensor,
    kernels: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    // Bias shape is implied by the kernel count here.
    let k_count = kernels.shape()[0];
    let bias = Tensor::zeros(&[k_count]);
    let d = ConvDims::resolve(input, kernels, &bias)?;
    let (c, h, w) = (d.channels, d.height, d.width);
    let (k, kh, kw) = (d.n_kernels, d.k_height, d.k_width);
    let (oh, ow) = (d.out_height, d.out_width);
    if grad_out.shape() != [k, oh, ow] {
        return Err(Error::shape("conv2d grad_out", grad_out.shape(), &[k, oh, ow]));
    }

    let x = input.values();
    let ker = kernels.values();
    let g = grad_out.values();

    let mut d_input = vec![0.0; c * h * w];
    let mut d_kernels = vec![0.0; k * c * kh * kw];
    let mut d_bias = vec![0.0; k];

    for ki in 0..k {
        for oy in 0..oh {
            for ox in 0..ow {
                let gv = g[ki * oh * ow + oy * ow + ox];
                if gv == 0.0 {
                    continue;
                }
                d_bias[ki] += gv;
                for ci in 0..c {
                    for py in 0..kh {
                        let x_base = ci * h * w + (oy + py) * w + ox;
                        let k_base = ki * c * kh * kw + ci * kh * kw + py * kw;
                        for px in 0..kw {
                            d_kernels[k_base + px] += gv * x[x_base + px];
                            d_input[x_base + px] += gv * ker[k_base + px];
                        }
                    }
                }
            }
        }
    }

    Ok((
        Tensor::new(input.shape().to_vec(), d_input)?,
        Tensor::new(kernels.shape().to_vec(), d_kernels)?,
        Tensor::new(vec![k], d_bias)?,
    ))
}

struct ConvDims {
    channels: usize,
    height: usize,
    width: usize,
    n_kernels: usize,
    k_height: usize,
    k_width: usize,
    out_height: usize,
    out_width: usize,
}

impl ConvDims {
    fn resolve(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<ConvDims> {
        let (channels, height, width) = match input.shape() {
            [h, w] => (1, *h, *w),
            [c, h, w] => (*c, *h, *w),
            other => return Err(Error::shape("conv2d input", other, &[0, 0])),
        };
        let (n_kernels, kc, k_height, k_width) = match kernels.shape() {
            [k, kh, kw] => (*k, 1, *kh, *kw),
            [k, c, kh, kw] => (*k, *c, *kh, *kw),
            other => return Err(Error::shape("conv2d kernels", other, &[0, 0, 0])),
        };
        if kc != channels {
            return Err(Error::shape(
                "conv2d channels",
                kernels.shape(),
                input.shape(),
            ));
        }
        if k_height > height || k_width > width {
            return Err(Error::shape("conv2d kernel extent", kernels.shape(), input.shape()));
        }
        if bias.shape() != [n_kernels] {
            return Err(Error::shape("conv2d bias", bias.shape(), &[n_kernels]));
        }
        Ok(ConvDims {
            channels,
            height,
            width,
            n_kernels,
            k_height,
            k_width,
            out_height: height - k_height + 1,
            out_width: width - k_width + 1,
        })
    }
}
