//! Layer primitives: valid convolution, 2x2 max pooling, ReLU, dense, and
//! softmax cross-entropy. Forward passes panic on shape mismatches (caller
//! bugs); backward passes return gradients in the same layouts as their
//! parameters.

use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::Tensor;

/// Valid convolution, stride 1. Weights are flat in (out_ch, ky, kx, in_ch)
/// order, one bias per output channel.
pub fn conv2d_forward(
    input: &Tensor,
    weights: &[f64],
    bias: &[f64],
    out_ch: usize,
    k: usize,
) -> Tensor {
    let (h, w, in_ch) = input.shape();
    assert!(h >= k && w >= k, "input {h}x{w} smaller than kernel {k}x{k}");
    assert_eq!(weights.len(), out_ch * k * k * in_ch);
    assert_eq!(bias.len(), out_ch);
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut out = Tensor::zeros(oh, ow, out_ch);
    for y in 0..oh {
        for x in 0..ow {
            for (oc, &b) in bias.iter().enumerate() {
                let mut acc = b;
                for ky in 0..k {
                    for kx in 0..k {
                        for ic in 0..in_ch {
                            let wi = ((oc * k + ky) * k + kx) * in_ch + ic;
                            acc += weights[wi] * input.get(y + ky, x + kx, ic);
                        }
                    }
                }
                out.set(y, x, oc, acc);
            }
        }
    }
    out
}

/// Gradients of a valid convolution: (d_input, d_weights, d_bias).
pub fn conv2d_backward(
    input: &Tensor,
    weights: &[f64],
    out_ch: usize,
    k: usize,
    dout: &Tensor,
) -> (Tensor, Vec<f64>, Vec<f64>) {
    let (h, w, in_ch) = input.shape();
    let (oh, ow, doc) = dout.shape();
    assert_eq!((oh, ow, doc), (h - k + 1, w - k + 1, out_ch));
    let mut dinput = Tensor::zeros(h, w, in_ch);
    let mut dweights = vec![0.0; weights.len()];
    let mut dbias = vec![0.0; out_ch];
    for y in 0..oh {
        for x in 0..ow {
            for (oc, db) in dbias.iter_mut().enumerate() {
                let g = dout.get(y, x, oc);
                *db += g;
                for ky in 0..k {
                    for kx in 0..k {
                        for ic in 0..in_ch {
                            let wi = ((oc * k + ky) * k + kx) * in_ch + ic;
                            dweights[wi] += g * input.get(y + ky, x + kx, ic);
                            dinput.add_at(y + ky, x + kx, ic, g * weights[wi]);
                        }
                    }
                }
            }
        }
    }
    (dinput, dweights, dbias)
}

pub fn relu(x: &Tensor) -> Tensor {
    Tensor {
        height: x.height,
        width: x.width,
        channels: x.channels,
        data: x.data.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
    }
}

/// Routes `dout` through the ReLU mask of the pre-activation `pre`.
pub fn relu_backward(pre: &Tensor, dout: &Tensor) -> Tensor {
    assert_eq!(pre.shape(), dout.shape());
    Tensor {
        height: pre.height,
        width: pre.width,
        channels: pre.channels,
        data: pre
            .data
            .iter()
            .zip(&dout.data)
            .map(|(&p, &g)| if p > 0.0 { g } else { 0.0 })
            .collect(),
    }
}

/// 2x2 max pooling, stride 2. A trailing odd row or column is dropped.
/// Ties pick the first candidate in row-major window order. Returns the
/// pooled tensor and, per output element, the flat input index that won.
pub fn maxpool2_forward(x: &Tensor) -> (Tensor, Vec<usize>) {
    let (h, w, c) = x.shape();
    let (oh, ow) = (h / 2, w / 2);
    assert!(oh > 0 && ow > 0, "input {h}x{w} too small to pool");
    let mut out = Tensor::zeros(oh, ow, c);
    let mut argmax = vec![0usize; oh * ow * c];
    for y in 0..oh {
        for x_out in 0..ow {
            for ch in 0..c {
                let mut best = x.get(2 * y, 2 * x_out, ch);
                let mut best_i = x.index(2 * y, 2 * x_out, ch);
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let v = x.get(2 * y + dy, 2 * x_out + dx, ch);
                    if v > best {
                        best = v;
                        best_i = x.index(2 * y + dy, 2 * x_out + dx, ch);
                    }
                }
                out.set(y, x_out, ch, best);
                argmax[out.index(y, x_out, ch)] = best_i;
            }
        }
    }
    (out, argmax)
}

/// Scatters `dout` back to the winning input positions.
pub fn maxpool2_backward(
    input_shape: (usize, usize, usize),
    argmax: &[usize],
    dout: &Tensor,
) -> Tensor {
    assert_eq!(argmax.len(), dout.len());
    let mut dinput = Tensor::zeros(input_shape.0, input_shape.1, input_shape.2);
    for (&i, &g) in argmax.iter().zip(&dout.data) {
        dinput.data[i] += g;
    }
    dinput
}

/// Fully connected layer: weights flat in (out, in) order.
pub fn dense_forward(x: &[f64], weights: &[f64], bias: &[f64]) -> Vec<f64> {
    let out_dim = bias.len();
    assert_eq!(weights.len(), out_dim * x.len());
    let mut out = Vec::with_capacity(out_dim);
    for o in 0..out_dim {
        let row = &weights[o * x.len()..(o + 1) * x.len()];
        let mut acc = bias[o];
        for (wv, xv) in row.iter().zip(x) {
            acc += wv * xv;
        }
        out.push(acc);
    }
    out
}

/// Gradients of a dense layer: (d_input, d_weights, d_bias).
pub fn dense_backward(
    x: &[f64],
    weights: &[f64],
    out_dim: usize,
    dout: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    assert_eq!(dout.len(), out_dim);
    assert_eq!(weights.len(), out_dim * x.len());
    let mut dx = vec![0.0; x.len()];
    let mut dw = vec![0.0; weights.len()];
    for (o, &g) in dout.iter().enumerate() {
        let base = o * x.len();
        for i in 0..x.len() {
            dw[base + i] = g * x[i];
            dx[i] += g * weights[base + i];
        }
    }
    (dx, dw, dout.to_vec())
}

/// Numerically stable softmax: the max logit is subtracted before
/// exponentiation.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    assert!(!logits.is_empty());
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| crate::math::exp(v - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Negative log-likelihood of the true class.
pub fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -crate::math::ln(probs[label].max(f64::MIN_POSITIVE))
}

/// Gradient of cross-entropy w.r.t. the logits: softmax output minus the
/// one-hot target.
pub fn softmax_xent_backward(probs: &[f64], label: usize) -> Vec<f64> {
    let mut d = probs.to_vec();
    d[label] -= 1.0;
    d
}
