//! Two-layer convolutional response predictor learned online.
//!
//! `f(x) = φ2(w2 ∗ φ1(w1 ∗ x))` is fitted to Gaussian labels by minimising a
//! γ-weighted squared error plus per-layer ridge penalties, optionally on the
//! rectified response `β·(f + prp(f))`. Optimisation is nonlinear conjugate
//! gradient with a backtracking line search.

mod memory;
mod objective;
mod optimizer;
pub mod weights_io;

pub use memory::{SampleMemory, TrainingSample};
pub use objective::{gradient, loss, Gradient};
pub use objective::{kink_margin, KinkMargin};
pub use optimizer::{optimize, optimize_with_report, CgVariant, LineSearch, OptimizeReport, OptimizerConfig};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ensure, Result};
use crate::grid::planes::{conv_forward, Planes};
use crate::grid::{ConvKernel, FeatureMap, Grid2D};

/// Pointwise nonlinearity applied after a convolution layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Identity,
    /// `x` for `x ≥ 0`, `slope·x` otherwise.
    LeakyRelu { slope: f64 },
}

impl Activation {
    pub const DEFAULT_HIDDEN: Activation = Activation::LeakyRelu { slope: 0.05 };

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }
}

/// Kernel banks `w1` (C_in → C_mid) and `w2` (C_mid → 1), their ridge
/// weights and the activations that follow each layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierWeights {
    pub w1: ConvKernel,
    pub w2: ConvKernel,
    pub lambda1: f64,
    pub lambda2: f64,
    pub phi1: Activation,
    pub phi2: Activation,
}

impl ClassifierWeights {
    pub fn new(w1: ConvKernel, w2: ConvKernel, lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::with_activations(w1, w2, lambda1, lambda2, Activation::DEFAULT_HIDDEN, Activation::Identity)
    }

    pub fn with_activations(
        w1: ConvKernel,
        w2: ConvKernel,
        lambda1: f64,
        lambda2: f64,
        phi1: Activation,
        phi2: Activation,
    ) -> Result<Self> {
        ensure!(
            w2.in_channels() == w1.out_channels(),
            Dimension,
            "w2 expects {} channels but w1 produces {}",
            w2.in_channels(),
            w1.out_channels()
        );
        ensure!(w2.out_channels() == 1, Dimension, "w2 must produce a single response channel");
        ensure!(
            lambda1 >= 0.0 && lambda2 >= 0.0 && lambda1.is_finite() && lambda2.is_finite(),
            Parameter,
            "regularizers must be finite and non-negative"
        );
        Ok(Self { w1, w2, lambda1, lambda2, phi1, phi2 })
    }

    /// Gaussian initialisation scaled by `1/sqrt(fan_in)`.
    pub fn random<R: Rng>(
        rng: &mut R,
        arch: &Architecture,
    ) -> Result<Self> {
        let Architecture { in_channels, mid_channels, kernel1, kernel2, .. } = *arch;
        let std1 = 1.0 / ((in_channels * kernel1 * kernel1) as f64).sqrt();
        let std2 = 1.0 / ((mid_channels * kernel2 * kernel2) as f64).sqrt();
        let n1 = Normal::new(0.0, std1).expect("positive std");
        let n2 = Normal::new(0.0, std2).expect("positive std");
        let w1 = ConvKernel::from_fn(mid_channels, in_channels, kernel1, kernel1, |_, _, _, _| n1.sample(rng))?;
        let w2 = ConvKernel::from_fn(1, mid_channels, kernel2, kernel2, |_, _, _, _| n2.sample(rng))?;
        Self::with_activations(w1, w2, arch.lambda1, arch.lambda2, arch.phi1, arch.phi2)
    }

    pub fn in_channels(&self) -> usize {
        self.w1.in_channels()
    }

    pub fn num_params(&self) -> usize {
        self.w1.weights().len() + self.w2.weights().len()
    }

    /// Flat parameter vector `[w1.., w2..]`.
    pub fn to_params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        p.extend_from_slice(self.w1.weights());
        p.extend_from_slice(self.w2.weights());
        p
    }

    /// Replaces all weights from a flat parameter vector.
    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.num_params());
        let n1 = self.w1.weights().len();
        self.w1.weights_mut().copy_from_slice(&params[..n1]);
        self.w2.weights_mut().copy_from_slice(&params[n1..]);
    }

    pub fn with_params(&self, params: &[f64]) -> Self {
        let mut w = self.clone();
        w.set_params(params);
        w
    }
}

/// Shape and hyper-parameters of the classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Architecture {
    pub in_channels: usize,
    pub mid_channels: usize,
    pub kernel1: usize,
    pub kernel2: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub phi1: Activation,
    pub phi2: Activation,
}

impl Architecture {
    pub fn new(in_channels: usize) -> Self {
        Self {
            in_channels,
            mid_channels: 8,
            kernel1: 3,
            kernel2: 3,
            lambda1: 1e-2,
            lambda2: 1e-2,
            phi1: Activation::DEFAULT_HIDDEN,
            phi2: Activation::Identity,
        }
    }
}

/// Intermediate activations of one forward pass.
pub(crate) struct Forward {
    pub z1: Planes,
    pub a1: Planes,
    pub z2: Planes,
    /// Response after φ2, single channel.
    pub f: Planes,
}

pub(crate) fn forward(w: &ClassifierWeights, params: &[f64], x: &Planes) -> Forward {
    let n1 = w.w1.weights().len();
    let mut z1 = Planes::zeros(0, 0, 0);
    conv_forward(x, w.w1.shape(), &params[..n1], &mut z1);
    let mut a1 = z1.clone();
    if w.phi1 != Activation::Identity {
        a1.data.iter_mut().for_each(|v| *v = w.phi1.apply(*v));
    }
    let mut z2 = Planes::zeros(0, 0, 0);
    conv_forward(&a1, w.w2.shape(), &params[n1..], &mut z2);
    let mut f = z2.clone();
    if w.phi2 != Activation::Identity {
        f.data.iter_mut().for_each(|v| *v = w.phi2.apply(*v));
    }
    Forward { z1, a1, z2, f }
}

/// Response map `φ2(w2 ∗ φ1(w1 ∗ x))`, same spatial size as `x`.
pub fn predict(w: &ClassifierWeights, x: &FeatureMap) -> Result<Grid2D> {
    ensure!(
        x.channels() == w.in_channels(),
        Dimension,
        "classifier expects {} channels, got {}",
        w.in_channels(),
        x.channels()
    );
    let planes = Planes::from_feature_map(x);
    Ok(forward(w, &w.to_params(), &planes).f.to_grid(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    /// Scalar composition of the two layers.
    fn naive_predict(w: &ClassifierWeights, x: &FeatureMap) -> Vec<f64> {
        let (h, wd) = x.dims();
        let conv = |input: &Vec<Vec<f64>>, k: &ConvKernel| -> Vec<Vec<f64>> {
            let (ph, pw) = (k.kernel_h() as isize / 2, k.kernel_w() as isize / 2);
            (0..k.out_channels())
                .map(|o| {
                    let mut out = vec![0.0; h * wd];
                    for y in 0..h as isize {
                        for xx in 0..wd as isize {
                            let mut acc = 0.0;
                            for i in 0..k.in_channels() {
                                for ky in 0..k.kernel_h() {
                                    for kx in 0..k.kernel_w() {
                                        let sy = y + ky as isize - ph;
                                        let sx = xx + kx as isize - pw;
                                        if sy >= 0 && sx >= 0 && sy < h as isize && sx < wd as isize {
                                            acc += k.get(o, i, ky, kx)
                                                * input[i][(sy * wd as isize + sx) as usize];
                                        }
                                    }
                                }
                            }
                            out[(y * wd as isize + xx) as usize] = acc;
                        }
                    }
                    out
                })
                .collect()
        };
        let x64: Vec<Vec<f64>> =
            x.grids().iter().map(|g| g.values().iter().map(|&v| v as f64).collect()).collect();
        let a1: Vec<Vec<f64>> = conv(&x64, &w.w1)
            .into_iter()
            .map(|c| c.into_iter().map(|v| w.phi1.apply(v)).collect())
            .collect();
        conv(&a1, &w.w2).remove(0).into_iter().map(|v| w.phi2.apply(v)).collect()
    }

    fn random_instance(seed: u64) -> (ClassifierWeights, FeatureMap) {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut arch = Architecture::new(3);
        arch.mid_channels = 4;
        let w = ClassifierWeights::random(&mut rng, &arch).unwrap();
        let x = FeatureMap::new(
            (0..3).map(|_| Grid2D::from_fn(7, 6, |_, _| rng.gen_range(-1.0..1.0))).collect(),
        )
        .unwrap();
        (w, x)
    }

    #[test]
    fn zero_weights_zero_response() {
        let w1 = ConvKernel::zeros(4, 2, 3, 3).unwrap();
        let w2 = ConvKernel::zeros(1, 4, 3, 3).unwrap();
        let w = ClassifierWeights::new(w1, w2, 0.1, 0.1).unwrap();
        let x = FeatureMap::new(vec![Grid2D::filled(5, 5, 2.0), Grid2D::filled(5, 5, -1.0)]).unwrap();
        let r = predict(&w, &x).unwrap();
        assert!(r.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_kernels_sum_channels() {
        let w1 = ConvKernel::new(1, 3, 1, 1, vec![1.0; 3]).unwrap();
        let w2 = ConvKernel::new(1, 1, 1, 1, vec![1.0]).unwrap();
        let w = ClassifierWeights::new(w1, w2, 0.0, 0.0).unwrap();
        let x = FeatureMap::new(vec![
            Grid2D::from_fn(4, 4, |r, c| (r + c) as f32),
            Grid2D::filled(4, 4, 0.5),
            Grid2D::from_fn(4, 4, |r, _| r as f32 * 0.25),
        ])
        .unwrap();
        let r = predict(&w, &x).unwrap();
        for p in 0..4 {
            for q in 0..4 {
                let expected = x.channel(0).get(p, q) + x.channel(1).get(p, q) + x.channel(2).get(p, q);
                assert_eq!(r.get(p, q), expected);
            }
        }
    }

    #[test]
    fn matches_scalar_composition() {
        for seed in 0..10 {
            let (w, x) = random_instance(seed);
            let r = predict(&w, &x).unwrap();
            let oracle = naive_predict(&w, &x);
            for (a, b) in r.values().iter().zip(&oracle) {
                let scale = b.abs().max(1e-3);
                assert!((*a as f64 - b).abs() / scale < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn channel_mismatch() {
        let (w, _) = random_instance(1);
        assert!(matches!(predict(&w, &FeatureMap::zeros(2, 4, 4)), Err(crate::Error::Dimension(_))));
    }

    #[test]
    fn mismatched_layers_rejected() {
        let w1 = ConvKernel::zeros(4, 2, 3, 3).unwrap();
        let w2 = ConvKernel::zeros(1, 3, 3, 3).unwrap();
        assert!(ClassifierWeights::new(w1.clone(), w2, 0.0, 0.0).is_err());
        let w2 = ConvKernel::zeros(2, 4, 3, 3).unwrap();
        assert!(ClassifierWeights::new(w1, w2, 0.0, 0.0).is_err());
    }

    #[test]
    fn params_round_trip() {
        let (w, _) = random_instance(2);
        let p = w.to_params();
        assert_eq!(w.with_params(&p), w);
    }
}
