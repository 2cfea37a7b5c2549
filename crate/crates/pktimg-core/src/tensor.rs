//! A minimal dense f64 tensor in H x W x C row-major layout, the only
//! shape the network needs.

use alloc::vec;
use alloc::vec::Vec;

/// Dense 3-d array of f64 stored row-major: index (y, x, c) lives at
/// `(y * width + x) * channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    /// All-zero tensor of the given shape.
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    /// Wraps an existing buffer; panics if the length does not match.
    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            height * width * channels,
            "tensor data length {} does not match shape {}x{}x{}",
            data.len(),
            height,
            width,
            channels
        );
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        debug_assert!(y < self.height && x < self.width && c < self.channels);
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, value: f64) {
        let i = self.index(y, x, c);
        self.data[i] = value;
    }

    #[inline]
    pub fn add_at(&mut self, y: usize, x: usize, c: usize, value: f64) {
        let i = self.index(y, x, c);
        self.data[i] += value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let mut t = Tensor::zeros(2, 3, 2);
        t.set(0, 0, 0, 1.0);
        t.set(0, 0, 1, 2.0);
        t.set(0, 1, 0, 3.0);
        t.set(1, 2, 1, 4.0);
        assert_eq!(t.data[0], 1.0);
        assert_eq!(t.data[1], 2.0);
        assert_eq!(t.data[2], 3.0);
        assert_eq!(t.data[11], 4.0);
        assert_eq!(t.get(1, 2, 1), 4.0);
    }

    #[test]
    fn from_vec_checks_length() {
        let t = Tensor::from_vec(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.shape(), (1, 2, 2));
        assert_eq!(t.len(), 4);
    }

    #[test]
    #[should_panic(expected = "does not match shape")]
    fn from_vec_rejects_bad_length() {
        let _ = Tensor::from_vec(2, 2, 1, vec![0.0; 3]);
    }
}
