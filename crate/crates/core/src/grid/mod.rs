//! Dense single- and multi-channel rasters plus the primitive operations every
//! other module builds on: "same"-padded multi-channel convolution, Gaussian
//! label synthesis, grid statistics and bilinear resampling.
//!
//! Storage is `f32`; convolution and statistics accumulate in `f64`.

mod conv;
mod label;
pub(crate) mod planes;
mod resample;
pub mod spsf;
mod stats;

pub use conv::{conv2d_mc, ConvKernel};
pub use label::make_gaussian_label;
pub use resample::resample_bilinear;
pub use stats::{grid_stats, GridStats};

use crate::error::{ensure, Result};

/// Row-major `height × width` raster of finite `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl Grid2D {
    pub fn new(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        ensure!(height > 0 && width > 0, Dimension, "grid dims must be positive, got {height}x{width}");
        ensure!(
            values.len() == height * width,
            Dimension,
            "expected {} values for a {height}x{width} grid, got {}",
            height * width,
            values.len()
        );
        ensure!(values.iter().all(|v| v.is_finite()), Parameter, "grid values must be finite");
        Ok(Self { height, width, values })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Self {
        assert!(height > 0 && width > 0, "grid dims must be positive");
        assert!(value.is_finite());
        Self { height, width, values: vec![value; height * width] }
    }

    /// Builds a grid by evaluating `f(row, col)` at every pixel.
    ///
    /// Panics if `f` produces a non-finite value.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        assert!(height > 0 && width > 0, "grid dims must be positive");
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                let v = f(r, c);
                assert!(v.is_finite(), "non-finite grid value at ({r}, {c})");
                values.push(v);
            }
        }
        Self { height, width, values }
    }

    /// Build from rows of equal length; mostly a test convenience.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        ensure!(!rows.is_empty(), Dimension, "no rows");
        let width = rows[0].as_ref().len();
        ensure!(rows.iter().all(|r| r.as_ref().len() == width), Dimension, "ragged rows");
        let values = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(rows.len(), width, values)
    }

    /// Constructs without validation; callers guarantee the invariants.
    pub(crate) fn from_raw(height: usize, width: usize, values: Vec<f32>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { height, width, values }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    /// Panics on a non-finite value, which would break the grid invariant.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f32) {
        assert!(value.is_finite(), "non-finite grid value");
        self.values[row * self.width + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.values[row * self.width..(row + 1) * self.width]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.values.chunks_exact(self.width)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row < self.height && col < self.width
    }

    /// Elementwise map; panics if `f` produces a non-finite value.
    pub fn map(&self, mut f: impl FnMut(f32) -> f32) -> Self {
        let values: Vec<f32> = self.values.iter().map(|&v| f(v)).collect();
        assert!(values.iter().all(|v| v.is_finite()), "map produced a non-finite value");
        Self::from_raw(self.height, self.width, values)
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.values
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn sum_f64(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum()
    }
}

/// Multi-channel raster: `channels` grids sharing one spatial size.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    grids: Vec<Grid2D>,
}

impl FeatureMap {
    pub fn new(grids: Vec<Grid2D>) -> Result<Self> {
        ensure!(!grids.is_empty(), Dimension, "feature map needs at least one channel");
        let dims = grids[0].dims();
        ensure!(
            grids.iter().all(|g| g.dims() == dims),
            Dimension,
            "all channels of a feature map must share dimensions"
        );
        Ok(Self { grids })
    }

    pub fn single(grid: Grid2D) -> Self {
        Self { grids: vec![grid] }
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        assert!(channels > 0);
        Self { grids: vec![Grid2D::zeros(height, width); channels] }
    }

    pub(crate) fn from_grids_unchecked(grids: Vec<Grid2D>) -> Self {
        debug_assert!(!grids.is_empty());
        Self { grids }
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.grids.len()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.grids[0].height()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.grids[0].width()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.grids[0].dims()
    }

    pub fn channel(&self, c: usize) -> &Grid2D {
        &self.grids[c]
    }

    pub fn grids(&self) -> &[Grid2D] {
        &self.grids
    }

    pub fn into_grids(self) -> Vec<Grid2D> {
        self.grids
    }

    /// Applies `f` to every channel, keeping the channel order.
    pub fn map_channels(&self, mut f: impl FnMut(&Grid2D) -> Grid2D) -> Result<Self> {
        Self::new(self.grids.iter().map(&mut f).collect())
    }

    pub fn energy(&self) -> f64 {
        self.grids
            .iter()
            .flat_map(|g| g.values())
            .map(|&v| (v as f64) * (v as f64))
            .sum()
    }
}
