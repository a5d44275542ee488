//! Sub-peak suppression operators on response maps.
//!
//! * [`prp`], peak response pooling: every pixel becomes the maximum of its
//!   row plus the maximum of its column, which concentrates the strongest
//!   response at the crossing of the dominant row and column.
//! * [`rectify`]: the rectified response `g + prp(g)`.
//! * [`brt`], boundary response truncation: zero everything outside a
//!   window around a peak.
//! * [`fuse_responses`]: β-weighted sum of per-scale response maps.
//! * [`find_subpeaks`]: local maxima above a fraction of the global maximum.

use std::collections::VecDeque;

use crate::error::{ensure, Result};
use crate::grid::Grid2D;

/// Per-row and per-column maxima of a grid.
pub fn row_col_max(g: &Grid2D) -> (Vec<f32>, Vec<f32>) {
    let mut col_max = g.row(0).to_vec();
    let mut row_max = Vec::with_capacity(g.height());
    for row in g.rows() {
        let mut m = row[0];
        for (c, &v) in row.iter().enumerate() {
            if v > m {
                m = v;
            }
            if v > col_max[c] {
                col_max[c] = v;
            }
        }
        row_max.push(m);
    }
    (row_max, col_max)
}

/// Peak response pooling: `out[p][q] = max_k g[p][k] + max_k g[k][q]`.
pub fn prp(g: &Grid2D) -> Grid2D {
    let (row_max, col_max) = row_col_max(g);
    let mut values = Vec::with_capacity(g.len());
    for &rm in &row_max {
        values.extend(col_max.iter().map(|&cm| saturate(rm + cm)));
    }
    Grid2D::from_raw(g.height(), g.width(), values)
}

/// Rectified response `g + prp(g)`, elementwise in `f32`.
pub fn rectify(g: &Grid2D) -> Grid2D {
    let pooled = prp(g);
    let values = g.values().iter().zip(pooled.values()).map(|(&a, &b)| saturate(a + b)).collect();
    Grid2D::from_raw(g.height(), g.width(), values)
}

#[inline]
fn saturate(v: f32) -> f32 {
    v.clamp(f32::MIN, f32::MAX)
}

/// Half-open window `[row0, row1) × [col0, col1)` kept by [`brt`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BrtWindow {
    pub row0: usize,
    pub row1: usize,
    pub col0: usize,
    pub col1: usize,
}

impl BrtWindow {
    /// Window of `max(1, round((1 - ratio)·dim))` pixels per axis centered on
    /// `peak`. An even extent puts the extra pixel on the high-index side; the
    /// window is shifted, never shrunk, to stay inside the grid.
    pub fn new(dims: (usize, usize), peak: (usize, usize), ratio: f64) -> Result<Self> {
        ensure!((0.0..=1.0).contains(&ratio), Parameter, "BRT ratio must be in [0, 1], got {ratio}");
        let (h, w) = dims;
        ensure!(
            peak.0 < h && peak.1 < w,
            Parameter,
            "BRT peak ({}, {}) outside {h}x{w} grid",
            peak.0,
            peak.1
        );
        let (row0, row1) = axis_window(h, peak.0, ratio);
        let (col0, col1) = axis_window(w, peak.1, ratio);
        Ok(Self { row0, row1, col0, col1 })
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row0..self.row1).contains(&row) && (self.col0..self.col1).contains(&col)
    }

    pub fn area(&self) -> usize {
        (self.row1 - self.row0) * (self.col1 - self.col0)
    }
}

fn axis_window(len: usize, center: usize, ratio: f64) -> (usize, usize) {
    let extent = (((1.0 - ratio) * len as f64).round() as usize).clamp(1, len);
    let start = center.saturating_sub((extent - 1) / 2).min(len - extent);
    (start, start + extent)
}

/// Boundary response truncation: keep the [`BrtWindow`] around `peak`, zero
/// everything else.
pub fn brt(g: &Grid2D, peak: (usize, usize), ratio: f64) -> Result<Grid2D> {
    let win = BrtWindow::new(g.dims(), peak, ratio)?;
    Ok(apply_window(g, &win))
}

pub(crate) fn apply_window(g: &Grid2D, win: &BrtWindow) -> Grid2D {
    let mut values = vec![0.0f32; g.len()];
    let w = g.width();
    for r in win.row0..win.row1 {
        values[r * w + win.col0..r * w + win.col1]
            .copy_from_slice(&g.row(r)[win.col0..win.col1]);
    }
    Grid2D::from_raw(g.height(), w, values)
}

/// Non-negative fusion weights β, one per response source.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights {
    betas: Vec<f64>,
}

impl FusionWeights {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        ensure!(!betas.is_empty(), Parameter, "need at least one fusion weight");
        ensure!(
            betas.iter().all(|b| b.is_finite() && *b >= 0.0),
            Parameter,
            "fusion weights must be finite and non-negative"
        );
        ensure!(betas.iter().any(|&b| b > 0.0), Parameter, "at least one fusion weight must be positive");
        Ok(Self { betas })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        Self { betas: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn raw(&self) -> &[f64] {
        &self.betas
    }

    /// Weights scaled to sum to one.
    pub fn normalized(&self) -> Vec<f64> {
        let total: f64 = self.betas.iter().sum();
        self.betas.iter().map(|b| b / total).collect()
    }

    /// Keeps only the first `n` sources.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Self::new(self.betas.iter().copied().take(n).collect())
    }
}

/// Elementwise `Σ_j β̂_j · maps[j]` with β normalized to sum to one.
pub fn fuse_responses(maps: &[Grid2D], weights: &FusionWeights) -> Result<Grid2D> {
    ensure!(!maps.is_empty(), Parameter, "no response maps to fuse");
    ensure!(
        maps.len() == weights.len(),
        Parameter,
        "{} maps but {} fusion weights",
        maps.len(),
        weights.len()
    );
    let dims = maps[0].dims();
    ensure!(maps.iter().all(|m| m.dims() == dims), Dimension, "fused maps must share dimensions");
    let betas = weights.normalized();
    let mut acc = vec![0.0f64; maps[0].len()];
    for (m, &b) in maps.iter().zip(&betas) {
        if b == 0.0 {
            continue;
        }
        for (a, &v) in acc.iter_mut().zip(m.values()) {
            *a += b * v as f64;
        }
    }
    Ok(Grid2D::from_raw(dims.0, dims.1, acc.into_iter().map(|v| v as f32).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub row: usize,
    pub col: usize,
    pub value: f32,
}

/// Local maxima sorted by descending value, ties by `(row, col)` ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakList {
    pub peaks: Vec<Peak>,
}

impl PeakList {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn first(&self) -> Option<&Peak> {
        self.peaks.first()
    }
}

/// Default relative threshold for sub-peak statistics.
pub const SUBPEAK_THRESHOLD: f64 = 0.5;

/// Finds every 8-neighbourhood local maximum with value at least
/// `rel_threshold · max(g)`.
///
/// A plateau (maximal 8-connected region of equal values) whose outer
/// boundary is strictly lower counts as one peak, reported at its
/// lexicographically smallest cell. When the global maximum is not positive
/// the threshold collapses to the maximum itself, so only the top plateau is
/// reported.
pub fn find_subpeaks(g: &Grid2D, rel_threshold: f64) -> PeakList {
    assert!(
        rel_threshold > 0.0 && rel_threshold <= 1.0,
        "rel_threshold must be in (0, 1], got {rel_threshold}"
    );
    let (h, w) = g.dims();
    let (_, max) = g.min_max();
    let threshold = if max > 0.0 { (rel_threshold * max as f64) as f32 } else { max };
    // f32 rounding of the product must not drop the global maximum.
    let threshold = threshold.min(max);

    let vals = g.values();
    let mut visited = vec![false; vals.len()];
    let mut peaks = Vec::new();
    let mut queue = VecDeque::new();
    let mut component = Vec::new();

    for start in 0..vals.len() {
        let v = vals[start];
        if visited[start] || v < threshold {
            continue;
        }
        component.clear();
        queue.clear();
        visited[start] = true;
        queue.push_back(start);
        let mut dominant = true;
        while let Some(idx) = queue.pop_front() {
            component.push(idx);
            let (r, c) = (idx / w, idx % w);
            for nr in r.saturating_sub(1)..=(r + 1).min(h - 1) {
                for nc in c.saturating_sub(1)..=(c + 1).min(w - 1) {
                    let n = nr * w + nc;
                    if n == idx {
                        continue;
                    }
                    let nv = vals[n];
                    if nv > v {
                        dominant = false;
                    } else if nv == v && !visited[n] {
                        visited[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        if dominant {
            // `start` is the first cell of the component in row-major order.
            peaks.push(Peak { row: start / w, col: start % w, value: v });
        }
    }
    peaks.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .expect("grid values are finite")
            .then((a.row, a.col).cmp(&(b.row, b.col)))
    });
    PeakList { peaks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{grid_stats, make_gaussian_label};
    use proptest::prelude::*;

    fn naive_prp(g: &Grid2D) -> Grid2D {
        Grid2D::from_fn(g.height(), g.width(), |p, q| {
            let mut rm = g.get(p, 0);
            for k in 0..g.width() {
                if g.get(p, k) > rm {
                    rm = g.get(p, k);
                }
            }
            let mut cm = g.get(0, q);
            for k in 0..g.height() {
                if g.get(k, q) > cm {
                    cm = g.get(k, q);
                }
            }
            rm + cm
        })
    }

    #[test]
    fn prp_uniform() {
        let g = Grid2D::filled(3, 4, 1.25);
        assert!(prp(&g).values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn prp_two_by_two() {
        let g = Grid2D::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        assert_eq!(prp(&g), Grid2D::from_rows(&[[2.0, 3.0], [3.0, 4.0]]).unwrap());
    }

    #[test]
    fn prp_single_source() {
        let mut g = Grid2D::zeros(5, 6);
        g.set(1, 4, 0.7);
        let out = prp(&g);
        for p in 0..5 {
            for q in 0..6 {
                let expected = match (p == 1, q == 4) {
                    (true, true) => 1.4,
                    (true, false) | (false, true) => 0.7,
                    _ => 0.0,
                };
                assert_eq!(out.get(p, q), expected);
            }
        }
    }

    #[test]
    fn rectify_cases() {
        assert_eq!(rectify(&Grid2D::zeros(3, 3)), Grid2D::zeros(3, 3));
        assert!(rectify(&Grid2D::filled(2, 5, 0.5)).values().iter().all(|&v| v == 1.5));
        let g = Grid2D::from_fn(6, 6, |r, c| ((r * 7 + c * 13) % 11) as f32 * 0.37 - 1.0);
        let oracle = naive_prp(&g);
        let expected = Grid2D::from_fn(6, 6, |r, c| g.get(r, c) + oracle.get(r, c));
        assert_eq!(rectify(&g), expected);
    }

    #[test]
    fn brt_identity_and_single_pixel() {
        let g = Grid2D::from_fn(7, 9, |r, c| (r + c) as f32 + 1.0);
        assert_eq!(brt(&g, (3, 4), 0.0).unwrap(), g);
        let one = brt(&g, (2, 6), 1.0).unwrap();
        for r in 0..7 {
            for c in 0..9 {
                let expected = if (r, c) == (2, 6) { g.get(r, c) } else { 0.0 };
                assert_eq!(one.get(r, c), expected);
            }
        }
    }

    #[test]
    fn brt_ten_percent_of_ten() {
        let g = Grid2D::filled(10, 10, 1.0);
        let out = brt(&g, (5, 5), 0.10).unwrap();
        // reference masking loop
        let win = BrtWindow::new((10, 10), (5, 5), 0.10).unwrap();
        assert_eq!(win.area(), 81);
        let zeroed = out.values().iter().filter(|&&v| v == 0.0).count();
        assert_eq!(zeroed, 19);
    }

    #[test]
    fn brt_window_parity_and_shift() {
        // even extent: extra pixel toward larger indices
        let win = BrtWindow::new((10, 10), (5, 5), 0.6).unwrap();
        assert_eq!((win.row0, win.row1), (4, 8));
        // shifted at the border, not shrunk
        let win = BrtWindow::new((10, 10), (0, 9), 0.3).unwrap();
        assert_eq!((win.row0, win.row1, win.col0, win.col1), (0, 7, 3, 10));
    }

    #[test]
    fn brt_errors() {
        let g = Grid2D::zeros(4, 4);
        assert!(matches!(brt(&g, (4, 0), 0.1), Err(crate::Error::Parameter(_))));
        assert!(brt(&g, (0, 0), 1.5).is_err());
        assert!(brt(&g, (0, 0), f64::NAN).is_err());
    }

    #[test]
    fn fuse_examples() {
        let m = Grid2D::from_rows(&[[1.0, -2.0], [0.5, 3.0]]).unwrap();
        assert_eq!(fuse_responses(std::slice::from_ref(&m), &FusionWeights::new(vec![1.0]).unwrap()).unwrap(), m);
        assert_eq!(
            fuse_responses(&[m.clone(), m.clone()], &FusionWeights::new(vec![0.5, 0.5]).unwrap()).unwrap(),
            m
        );
        let a = Grid2D::from_rows(&[[0.0, 2.0]]).unwrap();
        let b = Grid2D::from_rows(&[[4.0, 0.0]]).unwrap();
        let fused = fuse_responses(&[a, b], &FusionWeights::new(vec![1.0, 3.0]).unwrap()).unwrap();
        assert_eq!(fused, Grid2D::from_rows(&[[3.0, 0.5]]).unwrap());
    }

    #[test]
    fn fuse_errors() {
        let a = Grid2D::zeros(2, 2);
        let b = Grid2D::zeros(3, 2);
        assert!(FusionWeights::new(vec![0.0, 0.0]).is_err());
        assert!(FusionWeights::new(vec![-1.0, 2.0]).is_err());
        assert!(fuse_responses(&[a.clone(), b], &FusionWeights::uniform(2)).is_err());
        assert!(fuse_responses(&[a], &FusionWeights::uniform(2)).is_err());
    }

    #[test]
    fn subpeaks_single_gaussian() {
        let g = make_gaussian_label(21, 21, (8.0, 12.0), 2.0).unwrap();
        let peaks = find_subpeaks(&g, 0.5);
        assert_eq!(peaks.len(), 1);
        assert_eq!((peaks.peaks[0].row, peaks.peaks[0].col), (8, 12));
    }

    /// Exhaustive neighbourhood scan, valid when no two neighbours tie.
    fn scan_strict_maxima(g: &Grid2D, rel: f64) -> usize {
        let (h, w) = g.dims();
        let (_, max) = g.min_max();
        let mut n = 0;
        for r in 0..h {
            for c in 0..w {
                let v = g.get(r, c);
                if (v as f64) < rel * max as f64 {
                    continue;
                }
                let mut is_max = true;
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                        if (dr, dc) == (0, 0) || rr < 0 || cc < 0 || rr >= h as i64 || cc >= w as i64 {
                            continue;
                        }
                        if g.get(rr as usize, cc as usize) >= v {
                            is_max = false;
                        }
                    }
                }
                n += is_max as usize;
            }
        }
        n
    }

    #[test]
    fn subpeaks_two_bumps() {
        let a = make_gaussian_label(30, 30, (14.0, 9.0), 1.5).unwrap();
        let b = make_gaussian_label(30, 30, (14.0, 19.0), 1.5).unwrap();
        let g = Grid2D::from_fn(30, 30, |r, c| a.get(r, c) + 0.8 * b.get(r, c));
        assert_eq!(scan_strict_maxima(&g, 0.5), 2);
        let peaks = find_subpeaks(&g, 0.5);
        assert_eq!(peaks.len(), 2);
        assert_eq!((peaks.peaks[0].row, peaks.peaks[0].col), (14, 9));
        assert_eq!((peaks.peaks[1].row, peaks.peaks[1].col), (14, 19));
    }

    fn two_bumps(second: (f64, f64), weight: f32) -> Grid2D {
        let a = make_gaussian_label(30, 30, (14.0, 9.0), 1.5).unwrap();
        let b = make_gaussian_label(30, 30, second, 1.5).unwrap();
        Grid2D::from_fn(30, 30, |r, c| a.get(r, c) + weight * b.get(r, c))
    }

    #[test]
    fn pooling_promotes_companions_in_the_same_row() {
        let g = two_bumps((14.0, 19.0), 0.8);
        assert_eq!(find_subpeaks(&g, 0.5).len(), 2);
        let pooled = find_subpeaks(&prp(&g), 0.5);
        assert_eq!(pooled.len(), 2);
        assert_eq!((pooled.peaks[0].row, pooled.peaks[0].col), (14, 9));
        // sharing the peak row lifts a weak companion to rowmax + its colmax
        let weak = two_bumps((14.0, 19.0), 0.3);
        assert_eq!(find_subpeaks(&weak, 0.5).len(), 1);
        assert_eq!(find_subpeaks(&prp(&weak), 0.5).len(), 2);
        assert_eq!(find_subpeaks(&rectify(&weak), 0.5).len(), 2);
    }

    #[test]
    fn pooling_adds_cross_peaks_for_diagonal_bumps() {
        // rowmax and colmax are both bimodal, so every (row peak, col peak)
        // pair is a maximum of the sum: 2, 1.8, 1.8, 1.6 against threshold 1
        let g = two_bumps((24.0, 22.0), 0.8);
        assert_eq!(find_subpeaks(&g, 0.5).len(), 2);
        assert_eq!(find_subpeaks(&prp(&g), 0.5).len(), 4);
        assert_eq!(find_subpeaks(&rectify(&g), 0.5).len(), 4);
        // below half height the companion vanishes from both
        let weak = two_bumps((24.0, 22.0), 0.4);
        assert_eq!(find_subpeaks(&weak, 0.5).len(), 1);
        assert_eq!(find_subpeaks(&prp(&weak), 0.5).len(), 3);
        assert_eq!(find_subpeaks(&rectify(&weak), 0.5).len(), 1);
    }

    #[test]
    fn subpeaks_plateaus() {
        assert_eq!(find_subpeaks(&Grid2D::filled(5, 5, 3.0), 0.5).len(), 1);
        let mut g = Grid2D::zeros(6, 6);
        for (r, c) in [(2, 2), (2, 3), (3, 3)] {
            g.set(r, c, 1.0);
        }
        g.set(5, 0, 0.9);
        let peaks = find_subpeaks(&g, 0.5);
        assert_eq!(peaks.len(), 2);
        assert_eq!((peaks.peaks[0].row, peaks.peaks[0].col), (2, 2));
        // a plateau touching a higher cell is not a peak
        g.set(4, 4, 2.0);
        let peaks = find_subpeaks(&g, 0.4);
        assert_eq!(peaks.len(), 2);
        assert_eq!((peaks.peaks[0].row, peaks.peaks[0].col), (4, 4));
    }

    #[test]
    fn subpeaks_negative_grid_reports_top() {
        let g = Grid2D::from_fn(4, 4, |r, c| -1.0 - (r + c) as f32);
        let peaks = find_subpeaks(&g, 0.5);
        assert_eq!(peaks.len(), 1);
        assert_eq!((peaks.peaks[0].row, peaks.peaks[0].col), (0, 0));
    }

    fn arb_grid() -> impl Strategy<Value = Grid2D> {
        (1usize..12, 1usize..12).prop_flat_map(|(h, w)| {
            proptest::collection::vec(-4.0f32..4.0, h * w)
                .prop_map(move |v| Grid2D::new(h, w, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn prp_matches_naive(g in arb_grid()) {
            prop_assert_eq!(prp(&g), naive_prp(&g));
        }

        // Exact when row/col maxima sums are representable (dyadic values);
        // otherwise each pooled value carries its own rounding.
        #[test]
        fn prp_separable_exact_on_dyadic_grids(
            g in arb_grid().prop_map(|g| g.map(|v| (v * 4096.0).round() / 4096.0)),
            idx in proptest::collection::vec(0usize..1000, 4),
        ) {
            let out = prp(&g);
            let (h, w) = g.dims();
            let (p, pp, q, qq) = (idx[0] % h, idx[1] % h, idx[2] % w, idx[3] % w);
            prop_assert_eq!(out.get(p, q) + out.get(pp, qq), out.get(p, qq) + out.get(pp, q));
        }

        #[test]
        fn prp_separable_within_rounding(g in arb_grid(), idx in proptest::collection::vec(0usize..1000, 4)) {
            let out = prp(&g);
            let (h, w) = g.dims();
            let (p, pp, q, qq) = (idx[0] % h, idx[1] % h, idx[2] % w, idx[3] % w);
            let lhs = out.get(p, q) as f64 + out.get(pp, qq) as f64;
            let rhs = out.get(p, qq) as f64 + out.get(pp, q) as f64;
            let ulp = f32::EPSILON as f64 * lhs.abs().max(rhs.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 2.0 * ulp);
        }

        #[test]
        fn prp_monotone(g in arb_grid(), bumps in proptest::collection::vec(0.0f32..2.0, 144)) {
            let h = Grid2D::from_fn(g.height(), g.width(), |r, c| g.get(r, c) + bumps[(r * 12 + c) % 144]);
            let (a, b) = (prp(&g), prp(&h));
            prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| x <= y));
        }

        #[test]
        fn prp_argmax_is_row_col_argmax(g in arb_grid()) {
            let (rm, cm) = row_col_max(&g);
            let first_max = |v: &[f32]| {
                let mut best = 0;
                for (i, &x) in v.iter().enumerate() {
                    if x > v[best] { best = i; }
                }
                best
            };
            prop_assert_eq!(grid_stats(&prp(&g)).argmax, (first_max(&rm), first_max(&cm)));
        }

        #[test]
        fn brt_contract(g in arb_grid(), pr in 0usize..100, pc in 0usize..100, ratio in 0.0f64..=1.0) {
            let peak = (pr % g.height(), pc % g.width());
            let out = brt(&g, peak, ratio).unwrap();
            let win = BrtWindow::new(g.dims(), peak, ratio).unwrap();
            for r in 0..g.height() {
                for c in 0..g.width() {
                    if win.contains(r, c) {
                        prop_assert_eq!(out.get(r, c), g.get(r, c));
                    } else {
                        prop_assert_eq!(out.get(r, c), 0.0);
                    }
                }
            }
            prop_assert!(grid_stats(&out).energy <= grid_stats(&g).energy);
        }

        #[test]
        fn brt_keeps_argmax(g in arb_grid(), ratio in 0.0f64..=1.0) {
            let s = grid_stats(&g);
            let out = brt(&g, s.argmax, ratio).unwrap();
            prop_assert_eq!(out.get(s.argmax.0, s.argmax.1), s.max_value);
        }

        #[test]
        fn fuse_scale_invariant(a in arb_grid(), b1 in 0.01f64..10.0, b2 in 0.01f64..10.0, k in 0.1f64..100.0) {
            let b = a.map(|v| 0.5 * v - 1.0);
            let w1 = FusionWeights::new(vec![b1, b2]).unwrap();
            let w2 = FusionWeights::new(vec![b1 * 4.0, b2 * 4.0]).unwrap();
            let w3 = FusionWeights::new(vec![b1 * k, b2 * k]).unwrap();
            let f1 = fuse_responses(&[a.clone(), b.clone()], &w1).unwrap();
            prop_assert_eq!(&f1, &fuse_responses(&[a.clone(), b.clone()], &w2).unwrap());
            prop_assert_eq!(&f1, &fuse_responses(&[a, b], &w3).unwrap());
        }

        #[test]
        fn nonconstant_grid_has_a_peak(g in arb_grid()) {
            let peaks = find_subpeaks(&g, 0.5);
            prop_assert!(!peaks.is_empty());
            let s = grid_stats(&g);
            prop_assert_eq!(peaks.peaks[0].value, s.max_value);
            for w in peaks.peaks.windows(2) {
                prop_assert!(w[0].value >= w[1].value);
            }
        }
    }
}
