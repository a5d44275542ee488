use crate::bbox::{iou, BBox};
use crate::error::Result;
use crate::sim::{render_features, ScaleSpec, Sequence};
use crate::tracker::{TrackDiagnostics, Tracker, TrackerConfig};

/// Frames between a failure and the re-initialisation.
pub const REINIT_GAP: usize = 5;

/// Anything that can be (re)initialised on a frame and then track forward.
pub trait FrameTracker {
    fn init(&mut self, frame: usize, bbox: BBox) -> Result<()>;
    /// Box for `frame`, and the sub-peak count of its response if known.
    fn track(&mut self, frame: usize) -> Result<(BBox, Option<usize>)>;
}

/// Frame-by-frame record of a protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct VotOutcome {
    pub failures: usize,
    /// Tracker output for every processed frame, `None` on init and gap frames.
    pub boxes: Vec<Option<BBox>>,
    /// Frames on which the tracker was (re)initialised.
    pub inits: Vec<usize>,
    /// Frames on which a failure was declared.
    pub failed: Vec<usize>,
    /// Sub-peak count per processed frame, in frame order.
    pub subpeaks: Vec<usize>,
}

impl VotOutcome {
    /// Processed frames with their predicted and ground-truth boxes.
    pub fn scored<'a>(&'a self, gt: &'a [BBox]) -> impl Iterator<Item = (usize, BBox, BBox)> + 'a {
        self.boxes.iter().enumerate().filter_map(move |(t, b)| b.map(|b| (t, b, gt[t])))
    }
}

/// Runs `tracker` over `gt.len()` frames. A frame whose box does not overlap
/// the ground truth is a failure; the tracker is re-initialised from ground
/// truth [`REINIT_GAP`] frames later and the frames in between are skipped.
pub fn vot_protocol<T: FrameTracker + ?Sized>(tracker: &mut T, gt: &[BBox]) -> Result<VotOutcome> {
    let n = gt.len();
    let mut out = VotOutcome { failures: 0, boxes: vec![None; n], inits: vec![], failed: vec![], subpeaks: vec![] };
    if n == 0 {
        return Ok(out);
    }
    tracker.init(0, gt[0])?;
    out.inits.push(0);
    let mut t = 1;
    while t < n {
        let (b, peaks) = tracker.track(t)?;
        out.boxes[t] = Some(b);
        if let Some(p) = peaks {
            out.subpeaks.push(p);
        }
        if iou(&b, &gt[t]) == 0.0 {
            out.failures += 1;
            out.failed.push(t);
            let restart = t + REINIT_GAP;
            if restart >= n {
                break;
            }
            tracker.init(restart, gt[restart])?;
            out.inits.push(restart);
            t = restart + 1;
        } else {
            t += 1;
        }
    }
    Ok(out)
}

/// Number of failures of `tracker` on `gt` under [`vot_protocol`].
pub fn vot_robustness<T: FrameTracker + ?Sized>(tracker: &mut T, gt: &[BBox]) -> Result<usize> {
    Ok(vot_protocol(tracker, gt)?.failures)
}

/// [`Tracker`] driven by frames rendered from a simulated sequence.
pub struct SimTracker<'a> {
    pub seq: &'a Sequence,
    pub scales: &'a ScaleSpec,
    pub config: TrackerConfig,
    tracker: Option<Tracker>,
    /// Diagnostics of every processed frame, keyed by frame index.
    pub diagnostics: Vec<(usize, TrackDiagnostics)>,
}

impl<'a> SimTracker<'a> {
    pub fn new(seq: &'a Sequence, scales: &'a ScaleSpec, config: TrackerConfig) -> Self {
        Self { seq, scales, config, tracker: None, diagnostics: vec![] }
    }
}

impl FrameTracker for SimTracker<'_> {
    fn init(&mut self, frame: usize, bbox: BBox) -> Result<()> {
        let x = render_features(self.seq, frame, self.scales)?;
        self.tracker = Some(Tracker::init(self.config.clone(), &x, bbox)?);
        Ok(())
    }

    fn track(&mut self, frame: usize) -> Result<(BBox, Option<usize>)> {
        let x = render_features(self.seq, frame, self.scales)?;
        let tracker = self.tracker.as_mut().ok_or_else(|| crate::Error::State("tracker not initialised".into()))?;
        let (b, d) = tracker.step(&x)?;
        let count = d.subpeak_count;
        self.diagnostics.push((frame, d));
        Ok((b, Some(count)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Replays a fixed list of boxes.
    struct Scripted {
        output: Box<dyn FnMut(usize) -> BBox>,
        inits: Vec<usize>,
    }

    impl FrameTracker for Scripted {
        fn init(&mut self, frame: usize, _: BBox) -> Result<()> {
            self.inits.push(frame);
            Ok(())
        }
        fn track(&mut self, frame: usize) -> Result<(BBox, Option<usize>)> {
            Ok(((self.output)(frame), None))
        }
    }

    fn gt(n: usize) -> Vec<BBox> {
        (0..n).map(|t| BBox::new(10.0 + t as f64, 10.0, 4.0, 4.0)).collect()
    }

    #[test]
    fn perfect_tracker_never_fails() {
        let g = gt(30);
        let g2 = g.clone();
        let mut t = Scripted { output: Box::new(move |f| g2[f]), inits: vec![] };
        let out = vot_protocol(&mut t, &g).unwrap();
        assert_eq!(out.failures, 0);
        assert_eq!(out.inits, vec![0]);
        assert_eq!(out.scored(&g).count(), 29);
    }

    #[test]
    fn off_screen_tracker_schedule() {
        for len in 2..60 {
            let g = gt(len);
            let mut t = Scripted { output: Box::new(|_| BBox::new(-100.0, -100.0, 1.0, 1.0)), inits: vec![] };
            let out = vot_protocol(&mut t, &g).unwrap();
            // fails at 1, 7, 13, ...; N = len - 1 tracked frames
            let n = len - 1;
            assert_eq!(out.failures, (n - 1) / 6 + 1, "len {len}");
            assert_eq!(out.failed.iter().take(3).copied().collect::<Vec<_>>(), [1, 7, 13].iter().copied().filter(|&f| f < len).collect::<Vec<_>>());
            assert!(out.inits.iter().skip(1).all(|&i| (i - 1) % 6 == 5));
        }
    }

    #[test]
    fn isolated_miss_is_one_failure() {
        let g = gt(40);
        let g2 = g.clone();
        let mut t = Scripted {
            output: Box::new(move |f| if f == 12 { BBox::new(-50.0, 0.0, 1.0, 1.0) } else { g2[f] }),
            inits: vec![],
        };
        let out = vot_protocol(&mut t, &g).unwrap();
        assert_eq!(out.failures, 1);
        assert_eq!(out.inits, vec![0, 17]);
        // gap frames 13..=17 are not scored
        assert!((13..=17).all(|f| out.boxes[f].is_none()));
        assert_eq!(out.scored(&g).count(), 39 - 5);
    }
}
