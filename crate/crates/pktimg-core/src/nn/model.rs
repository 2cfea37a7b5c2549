//! The fixed network: conv(8@3x3) + ReLU, 2x2 maxpool, conv(16@3x3) +
//! ReLU, 2x2 maxpool, dense(64) + ReLU, dense(classes) + softmax.
//!
//! Everything is f64 and single-threaded, so a given seed reproduces the
//! same parameters bit for bit on any platform.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::nn::layers::{
    conv2d_backward, conv2d_forward, cross_entropy, dense_backward, dense_forward,
    maxpool2_backward, maxpool2_forward, relu, relu_backward, softmax, softmax_xent_backward,
};
use crate::tensor::Tensor;

pub const CONV1_CHANNELS: usize = 8;
pub const CONV2_CHANNELS: usize = 16;
pub const KERNEL: usize = 3;
pub const HIDDEN: usize = 64;

/// Smallest input side the stack of two conv+pool stages can digest.
pub const MIN_INPUT_SIDE: u16 = 10;

/// Input geometry and class count; fully determines every tensor shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub width: u16,
    pub height: u16,
    pub classes: u16,
    pub pixel_max: u8,
}

/// Configuration problems caught before any training starts.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    InputTooSmall { width: u16, height: u16 },
    TooFewClasses(u16),
    ZeroPixelMax,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InputTooSmall { width, height } => write!(
                f,
                "input {width}x{height} is too small: both sides must be at least \
                 {MIN_INPUT_SIDE} to survive two conv+pool stages"
            ),
            ModelError::TooFewClasses(k) => {
                write!(f, "need at least 2 classes to classify, got {k}")
            }
            ModelError::ZeroPixelMax => write!(f, "pixel maximum must be nonzero"),
        }
    }
}

impl core::error::Error for ModelError {}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.width < MIN_INPUT_SIDE || self.height < MIN_INPUT_SIDE {
            return Err(ModelError::InputTooSmall {
                width: self.width,
                height: self.height,
            });
        }
        if self.classes < 2 {
            return Err(ModelError::TooFewClasses(self.classes));
        }
        if self.pixel_max == 0 {
            return Err(ModelError::ZeroPixelMax);
        }
        Ok(())
    }

    fn after_conv_pool(side: usize) -> usize {
        (side - (KERNEL - 1)) / 2
    }

    /// Spatial shape after both conv+pool stages.
    pub fn feature_shape(&self) -> (usize, usize) {
        let h = Self::after_conv_pool(Self::after_conv_pool(self.height as usize));
        let w = Self::after_conv_pool(Self::after_conv_pool(self.width as usize));
        (h, w)
    }

    /// Flattened input width of the first dense layer.
    pub fn flat_features(&self) -> usize {
        let (h, w) = self.feature_shape();
        h * w * CONV2_CHANNELS
    }
}

/// All learnable parameters, or their gradients. Field order is the
/// serialization order.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub conv1_w: Vec<f64>,
    pub conv1_b: Vec<f64>,
    pub conv2_w: Vec<f64>,
    pub conv2_b: Vec<f64>,
    pub fc1_w: Vec<f64>,
    pub fc1_b: Vec<f64>,
    pub fc2_w: Vec<f64>,
    pub fc2_b: Vec<f64>,
}

impl Params {
    fn zeros(config: &ModelConfig) -> Self {
        let flat = config.flat_features();
        let classes = config.classes as usize;
        Self {
            conv1_w: vec![0.0; CONV1_CHANNELS * KERNEL * KERNEL],
            conv1_b: vec![0.0; CONV1_CHANNELS],
            conv2_w: vec![0.0; CONV2_CHANNELS * KERNEL * KERNEL * CONV1_CHANNELS],
            conv2_b: vec![0.0; CONV2_CHANNELS],
            fc1_w: vec![0.0; HIDDEN * flat],
            fc1_b: vec![0.0; HIDDEN],
            fc2_w: vec![0.0; classes * HIDDEN],
            fc2_b: vec![0.0; classes],
        }
    }

    pub fn slices(&self) -> [&[f64]; 8] {
        [
            &self.conv1_w,
            &self.conv1_b,
            &self.conv2_w,
            &self.conv2_b,
            &self.fc1_w,
            &self.fc1_b,
            &self.fc2_w,
            &self.fc2_b,
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 8] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
        ]
    }

    /// Serialization names, aligned with [`Params::slices`].
    pub fn names() -> [&'static str; 8] {
        [
            "conv1_w", "conv1_b", "conv2_w", "conv2_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b",
        ]
    }

    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * scale;
            }
        }
    }

    pub fn count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }
}

/// The convolutional classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub config: ModelConfig,
    pub params: Params,
}

/// Intermediate activations kept for the backward pass.
struct Forward {
    input: Tensor,
    c1_pre: Tensor,
    p1: Tensor,
    m1: Vec<usize>,
    c1_shape: (usize, usize, usize),
    c2_pre: Tensor,
    p2: Tensor,
    m2: Vec<usize>,
    c2_shape: (usize, usize, usize),
    fc1_pre: Vec<f64>,
    fc1_out: Vec<f64>,
    probs: Vec<f64>,
}

impl CnnModel {
    /// Fresh model with He-normal weights drawn from a ChaCha12 stream
    /// seeded by `seed`; biases start at zero.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Self::init_with_rng(config, &mut rng)
    }

    /// Same as [`CnnModel::new`] but drawing from a caller-owned stream, so
    /// a training run can keep one stream for init and epoch shuffles.
    /// Weight tensors are filled in serialization order.
    pub fn init_with_rng(config: ModelConfig, rng: &mut impl Rng) -> Result<Self, ModelError> {
        config.validate()?;
        let mut params = Params::zeros(&config);
        let flat = config.flat_features();
        fill_he(&mut params.conv1_w, KERNEL * KERNEL, rng);
        fill_he(&mut params.conv2_w, KERNEL * KERNEL * CONV1_CHANNELS, rng);
        fill_he(&mut params.fc1_w, flat, rng);
        fill_he(&mut params.fc2_w, HIDDEN, rng);
        Ok(Self { config, params })
    }

    /// Scales raw pixels into a [0, 1] float tensor.
    fn input_tensor(&self, pixels: &[u8]) -> Tensor {
        let (h, w) = (self.config.height as usize, self.config.width as usize);
        assert_eq!(
            pixels.len(),
            h * w,
            "expected {h}x{w} = {} pixels, got {}",
            h * w,
            pixels.len()
        );
        let max = f64::from(self.config.pixel_max);
        Tensor::from_vec(h, w, 1, pixels.iter().map(|&p| f64::from(p) / max).collect())
    }

    fn forward(&self, pixels: &[u8]) -> Forward {
        let p = &self.params;
        let input = self.input_tensor(pixels);
        let c1_pre = conv2d_forward(&input, &p.conv1_w, &p.conv1_b, CONV1_CHANNELS, KERNEL);
        let c1 = relu(&c1_pre);
        let c1_shape = c1.shape();
        let (p1, m1) = maxpool2_forward(&c1);
        let c2_pre = conv2d_forward(&p1, &p.conv2_w, &p.conv2_b, CONV2_CHANNELS, KERNEL);
        let c2 = relu(&c2_pre);
        let c2_shape = c2.shape();
        let (p2, m2) = maxpool2_forward(&c2);
        let fc1_pre = dense_forward(&p2.data, &p.fc1_w, &p.fc1_b);
        let fc1_out: Vec<f64> = fc1_pre.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        let logits = dense_forward(&fc1_out, &p.fc2_w, &p.fc2_b);
        let probs = softmax(&logits);
        Forward {
            input,
            c1_pre,
            p1,
            m1,
            c1_shape,
            c2_pre,
            p2,
            m2,
            c2_shape,
            fc1_pre,
            fc1_out,
            probs,
        }
    }

    /// Class probabilities for one image.
    pub fn probabilities(&self, pixels: &[u8]) -> Vec<f64> {
        self.forward(pixels).probs
    }

    /// Predicted label: highest probability, ties to the smallest label.
    pub fn predict(&self, pixels: &[u8]) -> u16 {
        argmax_tie_smallest(&self.probabilities(pixels)) as u16
    }

    /// Cross-entropy loss of one labeled image.
    pub fn loss(&self, pixels: &[u8], label: u16) -> f64 {
        cross_entropy(&self.forward(pixels).probs, usize::from(label))
    }

    /// Loss and parameter gradients for one labeled image.
    pub fn grads(&self, pixels: &[u8], label: u16) -> (f64, Params) {
        let p = &self.params;
        let f = self.forward(pixels);
        let loss = cross_entropy(&f.probs, usize::from(label));

        let dlogits = softmax_xent_backward(&f.probs, usize::from(label));
        let (dfc1_out, fc2_w_g, fc2_b_g) =
            dense_backward(&f.fc1_out, &p.fc2_w, self.config.classes as usize, &dlogits);
        let dfc1_pre: Vec<f64> = f
            .fc1_pre
            .iter()
            .zip(&dfc1_out)
            .map(|(&pre, &g)| if pre > 0.0 { g } else { 0.0 })
            .collect();
        let (dflat, fc1_w_g, fc1_b_g) =
            dense_backward(&f.p2.data, &p.fc1_w, HIDDEN, &dfc1_pre);
        let dp2 = Tensor::from_vec(f.p2.height, f.p2.width, f.p2.channels, dflat);
        let dc2 = relu_backward(&f.c2_pre, &maxpool2_backward(f.c2_shape, &f.m2, &dp2));
        let (dp1, conv2_w_g, conv2_b_g) =
            conv2d_backward(&f.p1, &p.conv2_w, CONV2_CHANNELS, KERNEL, &dc2);
        let dc1 = relu_backward(&f.c1_pre, &maxpool2_backward(f.c1_shape, &f.m1, &dp1));
        let (_, conv1_w_g, conv1_b_g) =
            conv2d_backward(&f.input, &p.conv1_w, CONV1_CHANNELS, KERNEL, &dc1);

        let grads = Params {
            conv1_w: conv1_w_g,
            conv1_b: conv1_b_g,
            conv2_w: conv2_w_g,
            conv2_b: conv2_b_g,
            fc1_w: fc1_w_g,
            fc1_b: fc1_b_g,
            fc2_w: fc2_w_g,
            fc2_b: fc2_b_g,
        };
        (loss, grads)
    }

    pub fn zero_grads(&self) -> Params {
        Params::zeros(&self.config)
    }
}

fn fill_he(weights: &mut [f64], fan_in: usize, rng: &mut impl Rng) {
    let sigma = crate::math::sqrt(2.0 / fan_in as f64);
    let dist = Normal::new(0.0, sigma).expect("sigma is positive and finite");
    for w in weights {
        *w = dist.sample(rng);
    }
}

/// Index of the maximum, first one winning on ties.
pub fn argmax_tie_smallest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(width: u16, height: u16, classes: u16) -> ModelConfig {
        ModelConfig {
            width,
            height,
            classes,
            pixel_max: 255,
        }
    }

    #[test]
    fn rejects_undersized_input() {
        let err = config(6, 6, 2).validate().unwrap_err();
        assert_eq!(err, ModelError::InputTooSmall { width: 6, height: 6 });
        assert!(err.to_string().contains("at least 10"));
        assert!(config(10, 10, 2).validate().is_ok());
        assert!(config(9, 28, 2).validate().is_err());
    }

    #[test]
    fn rejects_single_class() {
        assert_eq!(
            config(28, 28, 1).validate().unwrap_err(),
            ModelError::TooFewClasses(1)
        );
    }

    #[test]
    fn feature_shapes() {
        // 28 -> 26 -> 13 -> 11 -> 5
        assert_eq!(config(28, 28, 2).flat_features(), 5 * 5 * CONV2_CHANNELS);
        // width 37 -> 35 -> 17 -> 15 -> 7, height 40 -> 38 -> 19 -> 17 -> 8
        assert_eq!(config(37, 40, 2).feature_shape(), (8, 7));
        // 12 -> 10 -> 5 -> 3 -> 1
        assert_eq!(config(12, 12, 3).flat_features(), CONV2_CHANNELS);
        // 10 is the floor
        assert_eq!(config(10, 10, 2).feature_shape(), (1, 1));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let cfg = config(12, 12, 3);
        let a = CnnModel::new(cfg, 7).unwrap();
        let b = CnnModel::new(cfg, 7).unwrap();
        assert_eq!(a.params, b.params);
        let c = CnnModel::new(cfg, 8).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn init_spread_matches_he_scale() {
        let model = CnnModel::new(config(28, 28, 5), 1).unwrap();
        let w = &model.params.conv2_w;
        let mean: f64 = w.iter().sum::<f64>() / w.len() as f64;
        let var: f64 = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w.len() as f64;
        let sigma = crate::math::sqrt(var);
        let expected = crate::math::sqrt(2.0 / (9.0 * CONV1_CHANNELS as f64));
        assert!(
            (sigma / expected) > 0.85 && (sigma / expected) < 1.15,
            "sample sigma {sigma} vs expected {expected}"
        );
        assert!(model.params.conv1_b.iter().all(|&b| b == 0.0));
        assert!(model.params.fc2_b.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn zeroed_model_predicts_smallest_label() {
        let mut model = CnnModel::new(config(12, 12, 4), 3).unwrap();
        for slice in model.params.slices_mut() {
            slice.fill(0.0);
        }
        // all logits equal, so every class ties and 0 must win
        assert_eq!(model.predict(&[200; 144]), 0);
        let probs = model.probabilities(&[17; 144]);
        for p in &probs {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn argmax_prefers_first_of_ties() {
        assert_eq!(argmax_tie_smallest(&[0.1, 0.4, 0.4, 0.1]), 1);
        assert_eq!(argmax_tie_smallest(&[0.5, 0.2, 0.5]), 0);
        assert_eq!(argmax_tie_smallest(&[1.0]), 0);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = CnnModel::new(config(10, 10, 3), 9).unwrap();
        let pixels: Vec<u8> = (0..100).map(|i| (i * 7 % 256) as u8).collect();
        let probs = model.probabilities(&pixels);
        assert_eq!(probs.len(), 3);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(probs.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn loss_decreases_along_negative_gradient() {
        let model = CnnModel::new(config(12, 12, 2), 11).unwrap();
        let pixels: Vec<u8> = (0..144).map(|i| (i * 13 % 251) as u8 + 1).collect();
        let (loss, grads) = model.grads(&pixels, 1);
        let mut stepped = model.clone();
        stepped.params.add_scaled(&grads, -0.05);
        assert!(stepped.loss(&pixels, 1) < loss);
    }

    #[test]
    #[should_panic(expected = "expected 12x12")]
    fn wrong_pixel_count_panics() {
        let model = CnnModel::new(config(12, 12, 2), 0).unwrap();
        let _ = model.predict(&[0; 100]);
    }

    #[test]
    fn param_count_matches_layout() {
        let model = CnnModel::new(config(12, 12, 3), 0).unwrap();
        // conv1 72+8, conv2 1152+16, fc1 64*16+64, fc2 3*64+3
        assert_eq!(model.params.count(), 72 + 8 + 1152 + 16 + 1024 + 64 + 192 + 3);
    }
}
