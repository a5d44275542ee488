use crate::bbox::{iou, BBox};
use crate::error::{ensure, Result};

/// Center-error thresholds 0..=50 px.
pub const PRECISION_THRESHOLDS: usize = 51;
/// Overlap thresholds 0, 0.01, ..., 1.
pub const SUCCESS_THRESHOLDS: usize = 101;

/// Precision and success curves with the trapezoidal success AUC.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    /// `(threshold px, fraction of frames with center error ≤ threshold)`.
    pub precision_curve: Vec<(f64, f64)>,
    /// `(threshold, fraction of frames with overlap > threshold)`.
    pub success_curve: Vec<(f64, f64)>,
    pub success_auc: f64,
}

impl Curves {
    /// Precision at the given pixel threshold (0..=50).
    pub fn precision_at(&self, px: usize) -> f64 {
        self.precision_curve[px].1
    }
}

fn trapezoid(curve: &[(f64, f64)]) -> f64 {
    curve.windows(2).map(|p| (p[1].0 - p[0].0) * (p[0].1 + p[1].1) / 2.0).sum()
}

/// OTB-style curves. An empty input yields all-zero curves.
pub fn precision_success(pred: &[BBox], gt: &[BBox]) -> Result<Curves> {
    ensure!(pred.len() == gt.len(), Dimension, "{} predictions for {} ground-truth boxes", pred.len(), gt.len());
    let n = pred.len().max(1) as f64;
    let mut errors: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| p.center_distance(g)).collect();
    let mut overlaps: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| iou(p, g)).collect();
    errors.sort_by(f64::total_cmp);
    overlaps.sort_by(f64::total_cmp);
    let precision_curve = (0..PRECISION_THRESHOLDS)
        .map(|i| {
            let t = i as f64;
            (t, errors.partition_point(|&e| e <= t) as f64 / n)
        })
        .collect();
    let success_curve: Vec<(f64, f64)> = (0..SUCCESS_THRESHOLDS)
        .map(|i| {
            let t = i as f64 / (SUCCESS_THRESHOLDS - 1) as f64;
            (t, (overlaps.len() - overlaps.partition_point(|&o| o <= t)) as f64 / n)
        })
        .collect();
    let success_auc = trapezoid(&success_curve).clamp(0.0, 1.0);
    Ok(Curves { precision_curve, success_curve, success_auc })
}

/// Summary of one tracking run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub curves: Curves,
    pub failures: usize,
    /// Scored frames.
    pub frames: usize,
    pub mean_center_error: f64,
    /// Mean sub-peak count over every frame the tracker processed.
    pub mean_subpeaks: f64,
    /// Fraction of processed frames whose response had exactly one sub-peak.
    pub single_peak_fraction: f64,
}

impl EvalResult {
    /// `pred`/`gt` are the scored frames; `subpeaks` holds one count per
    /// processed frame.
    pub fn new(pred: &[BBox], gt: &[BBox], failures: usize, subpeaks: &[usize]) -> Result<Self> {
        let curves = precision_success(pred, gt)?;
        let frames = pred.len();
        let mean_center_error = if frames == 0 {
            0.0
        } else {
            pred.iter().zip(gt).map(|(p, g)| p.center_distance(g)).sum::<f64>() / frames as f64
        };
        let (mean_subpeaks, single_peak_fraction) = subpeak_summary(subpeaks);
        let r = Self { curves, failures, frames, mean_center_error, mean_subpeaks, single_peak_fraction };
        r.assert_monotone();
        Ok(r)
    }

    pub fn success_auc(&self) -> f64 {
        self.curves.success_auc
    }

    /// Precision non-decreasing, success non-increasing.
    pub fn assert_monotone(&self) {
        let c = &self.curves;
        assert!(c.precision_curve.windows(2).all(|p| p[0].1 <= p[1].1), "precision curve decreases");
        assert!(c.success_curve.windows(2).all(|p| p[0].1 >= p[1].1), "success curve increases");
    }
}

pub(crate) fn subpeak_summary(counts: &[usize]) -> (f64, f64) {
    if counts.is_empty() {
        return (0.0, 0.0);
    }
    let n = counts.len() as f64;
    (
        counts.iter().sum::<usize>() as f64 / n,
        counts.iter().filter(|&&c| c == 1).count() as f64 / n,
    )
}
