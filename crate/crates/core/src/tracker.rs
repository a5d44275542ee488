//! Online tracking loop: truncate, predict, rectify, fuse, localize, learn.
//!
//! Boxes and peaks live in the coordinates of the first (finest) scale.
//! Coarser scales are reached with the corner-aligned mapping used by the
//! simulator and by [`resample_bilinear`].

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::bbox::BBox;
use crate::classifier::{
    optimize_with_report, predict, Activation, Architecture, ClassifierWeights, OptimizerConfig, SampleMemory,
    TrainingSample,
};
use crate::error::{ensure, Result};
use crate::grid::{grid_stats, make_gaussian_label, resample_bilinear, FeatureMap, Grid2D, GridStats};
use crate::peak::{apply_window, find_subpeaks, fuse_responses, rectify, BrtWindow, FusionWeights, SUBPEAK_THRESHOLD};
use crate::sim::coordinate_ratio;

/// Where boundary response truncation is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrtDomain {
    /// Every feature channel, before prediction.
    Features,
    /// The fused response.
    Response,
    Both,
}

impl BrtDomain {
    pub fn features(self) -> bool {
        matches!(self, BrtDomain::Features | BrtDomain::Both)
    }

    pub fn response(self) -> bool {
        matches!(self, BrtDomain::Response | BrtDomain::Both)
    }

    pub fn name(self) -> &'static str {
        match self {
            BrtDomain::Features => "features",
            BrtDomain::Response => "response",
            BrtDomain::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "features" => Some(BrtDomain::Features),
            "response" => Some(BrtDomain::Response),
            "both" => Some(BrtDomain::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub brt_on: bool,
    pub prp_on: bool,
    pub multiscale_on: bool,
    pub brt_ratio: f64,
    pub brt_domain: BrtDomain,
    /// Rectify the fused response instead of each scale's response.
    pub prp_after_fusion: bool,
    /// One β per feature scale.
    pub fusion: FusionWeights,
    pub update_interval: usize,
    /// Label σ as a fraction of the smaller box side (finest scale).
    pub label_sigma_factor: f64,
    pub mid_channels: usize,
    pub kernel1: usize,
    pub kernel2: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub leaky_slope: f64,
    pub memory_capacity: usize,
    pub memory_decay: f64,
    pub init_optimizer: OptimizerConfig,
    pub update_optimizer: OptimizerConfig,
    /// Multiplier applied to the box size every frame.
    pub scale_adapt: f64,
    /// Seed of the classifier weight initialisation.
    pub seed: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            brt_on: true,
            prp_on: true,
            multiscale_on: true,
            brt_ratio: 0.10,
            brt_domain: BrtDomain::Features,
            prp_after_fusion: false,
            fusion: FusionWeights::uniform(2),
            update_interval: 10,
            label_sigma_factor: 0.125,
            mid_channels: 8,
            kernel1: 3,
            kernel2: 3,
            lambda1: 1e-2,
            lambda2: 1e-2,
            leaky_slope: 0.05,
            memory_capacity: 20,
            memory_decay: 0.2,
            init_optimizer: OptimizerConfig::default().with_iters(60),
            update_optimizer: OptimizerConfig::default().with_iters(10),
            scale_adapt: 1.0,
            seed: 0,
        }
    }
}

impl TrackerConfig {
    /// Baseline: no truncation, no pooling, finest scale only.
    pub fn baseline() -> Self {
        Self::default().with_flags(false, false, false)
    }

    pub fn with_flags(mut self, brt: bool, prp: bool, multiscale: bool) -> Self {
        self.brt_on = brt;
        self.prp_on = prp;
        self.multiscale_on = multiscale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure!((0.0..=1.0).contains(&self.brt_ratio), Parameter, "brt_ratio must be in [0, 1]");
        ensure!(self.update_interval >= 1, Parameter, "update_interval must be at least 1");
        ensure!(
            self.label_sigma_factor > 0.0 && self.label_sigma_factor.is_finite(),
            Parameter,
            "label sigma factor must be positive"
        );
        ensure!(self.mid_channels >= 1, Parameter, "mid_channels must be positive");
        ensure!(self.kernel1 % 2 == 1 && self.kernel2 % 2 == 1, Parameter, "kernel sizes must be odd");
        ensure!(self.scale_adapt > 0.0 && self.scale_adapt.is_finite(), Parameter, "scale_adapt must be positive");
        ensure!(self.leaky_slope.is_finite(), Parameter, "leaky slope must be finite");
        self.init_optimizer.validate()?;
        self.update_optimizer.validate()?;
        SampleMemory::new(self.memory_capacity, self.memory_decay)?;
        Ok(())
    }

    fn architecture(&self, in_channels: usize) -> Architecture {
        Architecture {
            in_channels,
            mid_channels: self.mid_channels,
            kernel1: self.kernel1,
            kernel2: self.kernel2,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            phi1: Activation::LeakyRelu { slope: self.leaky_slope },
            phi2: Activation::Identity,
        }
    }

    /// Number of scales actually used for `available` input scales.
    fn active_scales(&self, available: usize) -> usize {
        if self.multiscale_on {
            available.min(self.fusion.len())
        } else {
            1
        }
    }
}

/// Learned model plus the localisation carried between frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    pub weights: ClassifierWeights,
    pub memory: SampleMemory,
    /// Integer peak in finest-scale coordinates.
    pub last_peak: (usize, usize),
    pub last_box: BBox,
    /// Frames stepped since initialisation.
    pub frame_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackDiagnostics {
    pub peak: (usize, usize),
    pub peak_value: f32,
    pub subpeak_count: usize,
    pub response_stats: GridStats,
    pub bbox: BBox,
    pub loss_after_update: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    state: TrackerState,
    /// Full-resolution dims.
    dims: (usize, usize),
    betas: FusionWeights,
}

/// Per-axis corner-aligned ratios from the finest scale to `dims`.
fn ratios(base: (usize, usize), dims: (usize, usize)) -> (f64, f64) {
    if base == dims {
        (1.0, 1.0)
    } else {
        (coordinate_ratio(base.0, dims.0), coordinate_ratio(base.1, dims.1))
    }
}

fn map_peak(peak: (usize, usize), base: (usize, usize), dims: (usize, usize)) -> (usize, usize) {
    let (ry, rx) = ratios(base, dims);
    let r = ((peak.0 as f64 * ry).round() as usize).min(dims.0 - 1);
    let c = ((peak.1 as f64 * rx).round() as usize).min(dims.1 - 1);
    (r, c)
}

fn truncate_features(x: &FeatureMap, peak: (usize, usize), ratio: f64) -> Result<FeatureMap> {
    let win = BrtWindow::new(x.dims(), peak, ratio)?;
    x.map_channels(|g| apply_window(g, &win))
}

impl Tracker {
    /// Fits a fresh classifier to the first frame.
    pub fn init(config: TrackerConfig, features: &[FeatureMap], bbox: BBox) -> Result<Self> {
        config.validate()?;
        ensure!(!features.is_empty(), Parameter, "need at least one feature scale");
        let dims = features[0].dims();
        let channels = features[0].channels();
        ensure!(
            features.iter().all(|f| f.channels() == channels),
            Dimension,
            "all scales must have the same channel count"
        );
        ensure!(
            bbox.is_finite() && bbox.h > 0.0 && bbox.w > 0.0,
            Parameter,
            "degenerate initial box {bbox:?}"
        );
        ensure!(
            bbox.cy >= 0.0 && bbox.cx >= 0.0 && bbox.cy <= (dims.0 - 1) as f64 && bbox.cx <= (dims.1 - 1) as f64,
            Parameter,
            "initial box center ({}, {}) outside the {}x{} map",
            bbox.cy,
            bbox.cx,
            dims.0,
            dims.1
        );
        let n = config.active_scales(features.len());
        let betas = config.fusion.truncated(n)?;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
        let weights = ClassifierWeights::random(&mut rng, &config.architecture(channels))?;
        let memory = SampleMemory::new(config.memory_capacity, config.memory_decay)?;
        let last_peak = (bbox.cy.round() as usize, bbox.cx.round() as usize);
        let state = TrackerState { weights, memory, last_peak, last_box: bbox, frame_index: 0 };
        let mut tracker = Self { config, state, dims, betas };
        let inputs = tracker.prepare(features)?;
        let init_cfg = tracker.config.init_optimizer;
        tracker.learn(&inputs, bbox, &init_cfg)?;
        Ok(tracker)
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    /// Active scales of `features`, truncated around the previous peak when
    /// feature-domain truncation is on.
    fn prepare(&self, features: &[FeatureMap]) -> Result<Vec<FeatureMap>> {
        let n = self.betas.len();
        ensure!(features.len() >= n, Dimension, "expected {n} feature scales, got {}", features.len());
        ensure!(features[0].dims() == self.dims, Dimension, "finest scale must be {:?}", self.dims);
        features[..n]
            .iter()
            .map(|x| {
                ensure!(
                    x.channels() == self.state.weights.in_channels(),
                    Dimension,
                    "expected {} channels, got {}",
                    self.state.weights.in_channels(),
                    x.channels()
                );
                if self.config.brt_on && self.config.brt_domain.features() {
                    let p = map_peak(self.state.last_peak, self.dims, x.dims());
                    truncate_features(x, p, self.config.brt_ratio)
                } else {
                    Ok(x.clone())
                }
            })
            .collect()
    }

    /// Inserts one labelled sample per scale and re-fits the classifier.
    fn learn(&mut self, inputs: &[FeatureMap], bbox: BBox, opt: &OptimizerConfig) -> Result<f64> {
        let sigma0 = self.config.label_sigma_factor * bbox.h.min(bbox.w);
        let batch = inputs
            .iter()
            .enumerate()
            .map(|(s, x)| {
                let (ry, rx) = ratios(self.dims, x.dims());
                let scale = if ry > 0.0 { ry } else { 1.0 };
                let sigma = (sigma0 * scale).max(0.25);
                let label = make_gaussian_label(x.height(), x.width(), (bbox.cy * ry, bbox.cx * rx), sigma)?;
                TrainingSample::new(x.clone(), label, s)
            })
            .collect::<Result<Vec<_>>>()?;
        self.state.memory.insert_batch(batch)?;
        let report = optimize_with_report(&self.state.weights, &self.state.memory, opt, self.config.prp_on, &self.betas)?;
        self.state.weights = report.weights.clone();
        Ok(report.final_loss())
    }

    /// Fused response for already prepared inputs, before response-domain truncation.
    fn respond(&self, inputs: &[FeatureMap]) -> Result<Grid2D> {
        let maps = inputs
            .iter()
            .map(|x| {
                let r = predict(&self.state.weights, x)?;
                let r = if self.config.prp_on && !self.config.prp_after_fusion { rectify(&r) } else { r };
                Ok(resample_bilinear(&r, self.dims.0, self.dims.1))
            })
            .collect::<Result<Vec<_>>>()?;
        let fused = if maps.len() == 1 {
            maps.into_iter().next().expect("one map")
        } else {
            fuse_responses(&maps, &self.betas)?
        };
        Ok(if self.config.prp_on && self.config.prp_after_fusion { rectify(&fused) } else { fused })
    }

    /// Fused (and optionally truncated) response map for `features`.
    pub fn response(&self, features: &[FeatureMap]) -> Result<Grid2D> {
        let inputs = self.prepare(features)?;
        self.finish_response(&inputs)
    }

    fn finish_response(&self, inputs: &[FeatureMap]) -> Result<Grid2D> {
        let fused = self.respond(inputs)?;
        if self.config.brt_on && self.config.brt_domain.response() {
            let win = BrtWindow::new(fused.dims(), self.state.last_peak, self.config.brt_ratio)?;
            Ok(apply_window(&fused, &win))
        } else {
            Ok(fused)
        }
    }

    /// Processes one frame and returns the new box.
    pub fn step(&mut self, features: &[FeatureMap]) -> Result<(BBox, TrackDiagnostics)> {
        self.step_with_response(features).map(|(b, d, _)| (b, d))
    }

    /// Like [`Tracker::step`], also returning the response the peak was taken from.
    pub fn step_with_response(&mut self, features: &[FeatureMap]) -> Result<(BBox, TrackDiagnostics, Grid2D)> {
        let inputs = self.prepare(features)?;
        let fused = self.finish_response(&inputs)?;
        let stats = grid_stats(&fused);
        let peak = stats.argmax;
        let bbox = peak_to_box(peak, &self.state.last_box, &fused, self.config.scale_adapt);
        let subpeak_count = find_subpeaks(&fused, SUBPEAK_THRESHOLD).len();

        self.state.frame_index += 1;
        self.state.last_peak = peak;
        self.state.last_box = bbox;
        let loss_after_update = if self.state.frame_index % self.config.update_interval == 0 {
            let opt = self.config.update_optimizer;
            Some(self.learn(&inputs, bbox, &opt)?)
        } else {
            None
        };
        let diag = TrackDiagnostics {
            peak,
            peak_value: stats.max_value,
            subpeak_count,
            response_stats: stats,
            bbox,
            loss_after_update,
        };
        Ok((bbox, diag, fused))
    }
}

/// Sub-pixel vertex offset of the parabola through `(l, c, r)` at `-1, 0, 1`,
/// clamped to `[-0.5, 0.5]`; zero unless the three points are strictly concave.
pub fn parabola_offset(l: f64, c: f64, r: f64) -> f64 {
    let denom = l - 2.0 * c + r;
    if denom >= 0.0 || !denom.is_finite() {
        return 0.0;
    }
    ((l - r) / (2.0 * denom)).clamp(-0.5, 0.5)
}

/// Box centered on the sub-pixel refined `peak`, sized from `prev`.
///
/// Refinement fits one parabola per axis through the peak and its two
/// neighbours; it is skipped for peaks on the grid border.
pub fn peak_to_box(peak: (usize, usize), prev: &BBox, fused: &Grid2D, scale_adapt: f64) -> BBox {
    let (h, w) = fused.dims();
    let (r, c) = peak;
    let (mut dy, mut dx) = (0.0, 0.0);
    if r > 0 && c > 0 && r + 1 < h && c + 1 < w {
        let v = |rr: usize, cc: usize| fused.get(rr, cc) as f64;
        dy = parabola_offset(v(r - 1, c), v(r, c), v(r + 1, c));
        dx = parabola_offset(v(r, c - 1), v(r, c), v(r, c + 1));
    }
    BBox::new(c as f64 + dx, r as f64 + dy, prev.h * scale_adapt, prev.w * scale_adapt)
}

/// CSV header matching [`TrackDiagnostics::csv_record`].
pub const DIAGNOSTICS_HEADER: [&str; 10] =
    ["frame", "peak_row", "peak_col", "peak_value", "subpeak_count", "cx", "cy", "h", "w", "loss"];

impl TrackDiagnostics {
    pub fn csv_record(&self, frame: usize) -> [String; 10] {
        [
            frame.to_string(),
            self.peak.0.to_string(),
            self.peak.1.to_string(),
            self.peak_value.to_string(),
            self.subpeak_count.to_string(),
            self.bbox.cx.to_string(),
            self.bbox.cy.to_string(),
            self.bbox.h.to_string(),
            self.bbox.w.to_string(),
            self.loss_after_update.map(|l| l.to_string()).unwrap_or_default(),
        ]
    }
}
