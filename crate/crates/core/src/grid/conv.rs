use super::planes::{conv_forward, KernelShape, Planes};
use super::FeatureMap;
use crate::error::{ensure, Result};

/// Bank of `out_channels × in_channels` odd-sized 2D kernels, stored
/// row-major as `[out][in][ky][kx]`.
///
/// Weights are kept in `f64`: the online optimizer and its finite-difference
/// checks work at that precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    out_channels: usize,
    in_channels: usize,
    kernel_h: usize,
    kernel_w: usize,
    weights: Vec<f64>,
}

impl ConvKernel {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        weights: Vec<f64>,
    ) -> Result<Self> {
        ensure!(
            out_channels > 0 && in_channels > 0,
            Dimension,
            "kernel channel counts must be positive"
        );
        ensure!(
            kernel_h % 2 == 1 && kernel_w % 2 == 1,
            Dimension,
            "kernel spatial dims must be odd, got {kernel_h}x{kernel_w}"
        );
        ensure!(
            weights.len() == out_channels * in_channels * kernel_h * kernel_w,
            Dimension,
            "kernel expects {} weights, got {}",
            out_channels * in_channels * kernel_h * kernel_w,
            weights.len()
        );
        ensure!(weights.iter().all(|w| w.is_finite()), Parameter, "kernel weights must be finite");
        Ok(Self { out_channels, in_channels, kernel_h, kernel_w, weights })
    }

    pub fn zeros(out_channels: usize, in_channels: usize, kernel_h: usize, kernel_w: usize) -> Result<Self> {
        Self::new(
            out_channels,
            in_channels,
            kernel_h,
            kernel_w,
            vec![0.0; out_channels * in_channels * kernel_h * kernel_w],
        )
    }

    /// Builds a kernel from `f(out, in, ky, kx)`.
    pub fn from_fn(
        out_channels: usize,
        in_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut weights = Vec::with_capacity(out_channels * in_channels * kernel_h * kernel_w);
        for o in 0..out_channels {
            for i in 0..in_channels {
                for ky in 0..kernel_h {
                    for kx in 0..kernel_w {
                        weights.push(f(o, i, ky, kx));
                    }
                }
            }
        }
        Self::new(out_channels, in_channels, kernel_h, kernel_w, weights)
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn kernel_h(&self) -> usize {
        self.kernel_h
    }

    pub fn kernel_w(&self) -> usize {
        self.kernel_w
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((o * self.in_channels + i) * self.kernel_h + ky) * self.kernel_w + kx]
    }

    /// Sum of squared weights.
    pub fn norm_sq(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    pub(crate) fn shape(&self) -> KernelShape {
        KernelShape {
            out_channels: self.out_channels,
            in_channels: self.in_channels,
            kh: self.kernel_h,
            kw: self.kernel_w,
        }
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }
}

/// Multi-channel "same"-padded cross-correlation.
///
/// Output channel `o` is `Σ_i xcorr(input[i], kernel[o][i])` with zero
/// padding, so the spatial size is preserved. Per output pixel the taps are
/// accumulated in `f64` in (input channel, ky, kx) order and rounded to `f32`
/// once.
pub fn conv2d_mc(input: &FeatureMap, kernel: &ConvKernel) -> Result<FeatureMap> {
    ensure!(
        kernel.in_channels() == input.channels(),
        Dimension,
        "kernel expects {} input channels, feature map has {}",
        kernel.in_channels(),
        input.channels()
    );
    let x = Planes::from_feature_map(input);
    let mut out = Planes::zeros(kernel.out_channels(), x.height, x.width);
    conv_forward(&x, kernel.shape(), kernel.weights(), &mut out);
    Ok(out.to_feature_map())
}
