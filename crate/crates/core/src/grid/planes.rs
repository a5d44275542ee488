//! `f64` channel-major work buffers and the convolution kernels shared by the
//! public `conv2d_mc` and the classifier's forward/backward passes.
//!
//! All convolutions are "same"-padded cross-correlations with odd kernels.
//! For every output pixel the taps are summed in (input channel, ky, kx)
//! order with out-of-bounds taps skipped; the scalar reference loops in the
//! tests rely on that order to compare bitwise.

use super::{FeatureMap, Grid2D};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Planes {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Planes {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width, data: vec![0.0; channels * height * width] }
    }

    pub fn from_feature_map(x: &FeatureMap) -> Self {
        let (height, width) = x.dims();
        let data = x.grids().iter().flat_map(|g| g.values()).map(|&v| v as f64).collect();
        Self { channels: x.channels(), height, width, data }
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Rounds to `f32`; values outside the `f32` range saturate so the grid
    /// stays finite.
    pub fn to_grid(&self, c: usize) -> Grid2D {
        let values = self.plane(c).iter().map(|&v| to_f32_saturating(v)).collect();
        Grid2D::from_raw(self.height, self.width, values)
    }

    pub fn to_feature_map(&self) -> FeatureMap {
        FeatureMap::from_grids_unchecked((0..self.channels).map(|c| self.to_grid(c)).collect())
    }
}

#[inline]
pub(crate) fn to_f32_saturating(v: f64) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(f32::MIN as f64, f32::MAX as f64) as f32
    }
}

/// Output rows `y` for which `y + offset` lies in `0..len`.
#[inline]
fn valid_range(len: usize, offset: isize) -> std::ops::Range<usize> {
    let lo = (-offset).max(0) as usize;
    let hi = (len as isize - offset).clamp(0, len as isize) as usize;
    lo.min(hi)..hi
}

/// Kernel geometry borrowed from a `ConvKernel` or a flat parameter slice.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelShape {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kh: usize,
    pub kw: usize,
}

impl KernelShape {
    pub fn len(&self) -> usize {
        self.out_channels * self.in_channels * self.kh * self.kw
    }

    #[inline]
    fn index(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_channels + i) * self.kh + ky) * self.kw + kx
    }
}

/// `out = conv(input, weights)`; `out` is overwritten.
pub(crate) fn conv_forward(input: &Planes, shape: KernelShape, weights: &[f64], out: &mut Planes) {
    debug_assert_eq!(input.channels, shape.in_channels);
    debug_assert_eq!(weights.len(), shape.len());
    let (h, w) = (input.height, input.width);
    if out.channels != shape.out_channels || out.height != h || out.width != w {
        *out = Planes::zeros(shape.out_channels, h, w);
    } else {
        out.data.fill(0.0);
    }
    let (ph, pw) = ((shape.kh / 2) as isize, (shape.kw / 2) as isize);
    for o in 0..shape.out_channels {
        let dst = out.plane_mut(o);
        for i in 0..shape.in_channels {
            let src = input.plane(i);
            for ky in 0..shape.kh {
                let dy = ky as isize - ph;
                let rows = valid_range(h, dy);
                for kx in 0..shape.kw {
                    let wt = weights[shape.index(o, i, ky, kx)];
                    if wt == 0.0 {
                        continue;
                    }
                    let dx = kx as isize - pw;
                    let cols = valid_range(w, dx);
                    if cols.is_empty() {
                        continue;
                    }
                    for y in rows.clone() {
                        let sy = (y as isize + dy) as usize;
                        let d = &mut dst[y * w + cols.start..y * w + cols.end];
                        let s0 = (sy * w) as isize + cols.start as isize + dx;
                        let s = &src[s0 as usize..s0 as usize + cols.len()];
                        for (a, &b) in d.iter_mut().zip(s) {
                            *a += wt * b;
                        }
                    }
                }
            }
        }
    }
}

/// Gradient of a scalar w.r.t. the convolution input given its gradient
/// w.r.t. the output. `grad_in` is overwritten.
pub(crate) fn conv_backward_input(
    grad_out: &Planes,
    shape: KernelShape,
    weights: &[f64],
    grad_in: &mut Planes,
) {
    let (h, w) = (grad_out.height, grad_out.width);
    if grad_in.channels != shape.in_channels || grad_in.height != h || grad_in.width != w {
        *grad_in = Planes::zeros(shape.in_channels, h, w);
    } else {
        grad_in.data.fill(0.0);
    }
    let (ph, pw) = ((shape.kh / 2) as isize, (shape.kw / 2) as isize);
    for o in 0..shape.out_channels {
        let g = grad_out.plane(o);
        for i in 0..shape.in_channels {
            let dst = grad_in.plane_mut(i);
            for ky in 0..shape.kh {
                let dy = ky as isize - ph;
                let rows = valid_range(h, dy);
                for kx in 0..shape.kw {
                    let wt = weights[shape.index(o, i, ky, kx)];
                    if wt == 0.0 {
                        continue;
                    }
                    let dx = kx as isize - pw;
                    let cols = valid_range(w, dx);
                    if cols.is_empty() {
                        continue;
                    }
                    // out[y][x] reads in[y+dy][x+dx]; scatter back.
                    for y in rows.clone() {
                        let sy = (y as isize + dy) as usize;
                        let s = &g[y * w + cols.start..y * w + cols.end];
                        let d0 = ((sy * w) as isize + cols.start as isize + dx) as usize;
                        let d = &mut dst[d0..d0 + cols.len()];
                        for (a, &b) in d.iter_mut().zip(s) {
                            *a += wt * b;
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates the gradient w.r.t. the kernel weights into `grad_w`.
pub(crate) fn conv_backward_weights(
    input: &Planes,
    grad_out: &Planes,
    shape: KernelShape,
    grad_w: &mut [f64],
) {
    let (h, w) = (input.height, input.width);
    let (ph, pw) = ((shape.kh / 2) as isize, (shape.kw / 2) as isize);
    for o in 0..shape.out_channels {
        let g = grad_out.plane(o);
        for i in 0..shape.in_channels {
            let src = input.plane(i);
            for ky in 0..shape.kh {
                let dy = ky as isize - ph;
                let rows = valid_range(h, dy);
                for kx in 0..shape.kw {
                    let dx = kx as isize - pw;
                    let cols = valid_range(w, dx);
                    let mut acc = 0.0;
                    for y in rows.clone() {
                        let sy = (y as isize + dy) as usize;
                        let gs = &g[y * w + cols.start..y * w + cols.end];
                        let s0 = ((sy * w) as isize + cols.start as isize + dx) as usize;
                        let xs = &src[s0..s0 + cols.len()];
                        acc += gs.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
                    }
                    grad_w[shape.index(o, i, ky, kx)] += acc;
                }
            }
        }
    }
}
