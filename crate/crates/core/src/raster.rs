//! Lattice-valued images and binary spot masks.
//!
//! Pixels are stored in row-major order: pixel `(i, j)` lives at index
//! `i * cols + j`. Every vector quantity over the lattice (the field, the
//! observation, the mask) uses this same vectorization.

use crate::error::{invalid, Error, Result};

/// A rectangular grid of finite real intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("raster must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "raster {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "non-finite intensity at pixel ({}, {})",
                k / cols,
                k % cols
            )));
        }
        Ok(Raster { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Raster::new(rows, cols, vec![value; rows * cols])
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Raster::filled(rows, cols, 0.0)
    }

    /// Builds a raster from a row-major closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Raster::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance (divisor N).
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.data.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / self.data.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Raster> {
        Raster::new(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Extracts the `height x width` block whose top-left pixel is `(r0, c0)`.
    pub fn crop(&self, r0: usize, c0: usize, height: usize, width: usize) -> Result<Raster> {
        if height == 0 || width == 0 || r0 + height > self.rows || c0 + width > self.cols {
            return Err(invalid(format!(
                "crop {r0},{c0},{height},{width} does not fit a {}x{} raster",
                self.rows, self.cols
            )));
        }
        Raster::from_fn(height, width, |i, j| self.get(r0 + i, c0 + j))
    }

    pub(crate) fn ensure_same_shape(&self, other: &Raster) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }
}

/// Affine map between a raster's native range and `[0, 1]`.
///
/// Constant rasters map to all zeros with unit scale so the inverse is
/// still well defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub offset: f64,
    pub scale: f64,
}

impl Normalization {
    pub fn fit(raster: &Raster) -> Self {
        let (lo, hi) = (raster.min(), raster.max());
        let scale = if hi > lo { hi - lo } else { 1.0 };
        Normalization { offset: lo, scale }
    }

    pub fn identity() -> Self {
        Normalization { offset: 0.0, scale: 1.0 }
    }

    pub fn forward(&self, raster: &Raster) -> Raster {
        let (o, s) = (self.offset, self.scale);
        raster.map(|v| (v - o) / s).expect("affine image of a finite raster is finite")
    }

    pub fn inverse(&self, raster: &Raster) -> Raster {
        let (o, s) = (self.offset, self.scale);
        raster.map(|v| v * s + o).expect("affine image of a finite raster is finite")
    }
}

/// Per-pixel spot (1) / background (0) labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpotMask {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl SpotMask {
    pub fn new(rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("mask must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "mask {rows}x{cols} needs {} labels, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|&e| e > 1) {
            return Err(invalid("mask labels must be 0 or 1"));
        }
        Ok(SpotMask { rows, cols, data })
    }

    pub fn background(rows: usize, cols: usize) -> Result<Self> {
        SpotMask::new(rows, cols, vec![0; rows * cols])
    }

    pub fn spots(rows: usize, cols: usize) -> Result<Self> {
        SpotMask::new(rows, cols, vec![1; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn is_spot(&self, i: usize, j: usize) -> bool {
        self.get(i, j) == 1
    }

    pub fn spot_count(&self) -> usize {
        self.data.iter().filter(|&&e| e == 1).count()
    }
}
