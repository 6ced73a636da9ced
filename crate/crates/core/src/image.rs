use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A real image stored row-major as a point of `R^(width·height)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, got: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn same_shape(&self, other: &Image) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        Ok(())
    }
}

/// Piecewise-constant synthetic test scene with values in `[0, 255]`.
///
/// A dark background with a bright rectangle, a mid-gray disc and a thin
/// bar, scaled to the requested size.
pub fn synthetic_scene(width: usize, height: usize) -> Image {
    let mut img = Image::filled(width, height, 40.0);
    let (w, h) = (width as f64, height as f64);
    for r in 0..height {
        for c in 0..width {
            let (y, x) = ((r as f64 + 0.5) / h, (c as f64 + 0.5) / w);
            let mut v = 40.0;
            if (0.12..0.55).contains(&x) && (0.15..0.45).contains(&y) {
                v = 220.0;
            }
            let (dx, dy) = (x - 0.68, y - 0.65);
            if dx * dx + dy * dy < 0.22 * 0.22 {
                v = 140.0;
            }
            if (0.2..0.3).contains(&x) && (0.6..0.9).contains(&y) {
                v = 250.0;
            }
            if (0.78..0.9).contains(&x) && (0.1..0.3).contains(&y) {
                v = 90.0;
            }
            img.set(r, c, v);
        }
    }
    img
}
