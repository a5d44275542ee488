use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;

use super::metrics::{subpeak_summary, EvalResult};
use super::protocol::{vot_protocol, SimTracker};
use crate::bbox::BBox;
use crate::error::{ensure, Result};
use crate::sim::{gen_sequence, ground_truth, ScaleSpec, SceneConfig};
use crate::tracker::TrackerConfig;

/// A benchmark: `sequences` scenes seeded `base_seed, base_seed + 1, ...`,
/// each tracked `repeats` times with tracker seeds `tracker.seed + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scene: SceneConfig,
    pub tracker: TrackerConfig,
    pub scales: ScaleSpec,
    pub sequences: usize,
    pub repeats: usize,
    pub base_seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            tracker: TrackerConfig::default(),
            scales: ScaleSpec::default(),
            sequences: 20,
            repeats: 1,
            base_seed: 0,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.sequences >= 1, Parameter, "need at least one sequence");
        ensure!(self.repeats >= 1, Parameter, "repeats must be at least 1");
        self.scene.validate()?;
        self.tracker.validate()
    }

    pub fn scene_for(&self, index: usize) -> SceneConfig {
        SceneConfig { seed: self.base_seed.wrapping_add(index as u64), ..self.scene.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub name: String,
    pub config: TrackerConfig,
}

/// The eight truncation / pooling / multi-scale combinations, baseline first.
pub fn ablation_variants(base: &TrackerConfig) -> Vec<Variant> {
    const GRID: [(bool, bool, bool); 8] = [
        (false, false, false),
        (true, false, false),
        (false, true, false),
        (false, false, true),
        (true, true, false),
        (true, false, true),
        (false, true, true),
        (true, true, true),
    ];
    GRID.iter()
        .map(|&(brt, prp, mf)| {
            let parts: Vec<&str> = [(brt, "brt"), (prp, "prp"), (mf, "mf")]
                .iter()
                .filter(|p| p.0)
                .map(|p| p.1)
                .collect();
            let name = if parts.is_empty() { "baseline".to_string() } else { parts.join("+") };
            Variant { name, config: base.clone().with_flags(brt, prp, mf) }
        })
        .collect()
}

/// One tracked sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRow {
    pub variant: usize,
    pub seed: u64,
    pub repeat: usize,
    pub result: EvalResult,
    /// Frames the tracker processed (sub-peak statistics are over these).
    pub processed: usize,
    pub subpeak_total: usize,
    pub single_peak_frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub name: String,
    pub brt: bool,
    pub prp: bool,
    pub mf: bool,
    pub runs: usize,
    pub failures: usize,
    /// Means over runs.
    pub success_auc: f64,
    pub precision20: f64,
    pub mean_center_error: f64,
    /// Pooled over every processed frame.
    pub mean_subpeaks: f64,
    pub single_peak_fraction: f64,
    /// Runs with fewer / more failures than the same run of the first variant.
    pub wins: usize,
    pub losses: usize,
    /// One-sided sign test of `wins` against `losses`.
    pub sign_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub summaries: Vec<VariantSummary>,
    /// Variant-major, then seed, then repeat.
    pub rows: Vec<SequenceRow>,
}

/// `P(X ≥ wins)` for `X ~ Binomial(wins + losses, 1/2)`; 1 when there are no
/// untied pairs.
pub fn sign_test_p(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    // log C(n, k) accumulated incrementally
    let ln2n = n as f64 * std::f64::consts::LN_2;
    let mut ln_c = 0.0;
    let mut p = 0.0;
    for k in 0..=n {
        if k > 0 {
            ln_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= wins {
            p += (ln_c - ln2n).exp();
        }
    }
    p.min(1.0)
}

fn run_one(run: &RunConfig, variant: usize, config: &TrackerConfig, index: usize, repeat: usize) -> Result<SequenceRow> {
    let scene = run.scene_for(index);
    let seq = gen_sequence(&scene)?;
    let gt = ground_truth(&seq);
    let cfg = TrackerConfig { seed: config.seed.wrapping_add(repeat as u64), ..config.clone() };
    let mut tracker = SimTracker::new(&seq, &run.scales, cfg);
    let out = vot_protocol(&mut tracker, &gt)?;
    let (pred, truth): (Vec<BBox>, Vec<BBox>) = out.scored(&gt).map(|(_, p, g)| (p, g)).unzip();
    let result = EvalResult::new(&pred, &truth, out.failures, &out.subpeaks)?;
    Ok(SequenceRow {
        variant,
        seed: scene.seed,
        repeat,
        result,
        processed: out.subpeaks.len(),
        subpeak_total: out.subpeaks.iter().sum(),
        single_peak_frames: out.subpeaks.iter().filter(|&&c| c == 1).count(),
    })
}

/// Tracks every (variant, sequence, repeat) triple, in parallel on the
/// current rayon pool, and summarises per variant against the first one.
pub fn compare_configs(run: &RunConfig, variants: &[Variant]) -> Result<AblationReport> {
    ensure!(variants.len() >= 2, Parameter, "need at least two variants to compare");
    run.validate()?;
    for v in variants {
        v.config.validate()?;
    }
    let jobs: Vec<(usize, usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..run.sequences).flat_map(move |s| (0..run.repeats).map(move |r| (v, s, r))))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(v, s, r)| run_one(run, v, &variants[v].config, s, r))
        .collect::<Result<Vec<_>>>()?;

    let per = run.sequences * run.repeats;
    let summaries = variants
        .iter()
        .enumerate()
        .map(|(vi, v)| {
            let mine = &rows[vi * per..(vi + 1) * per];
            let base = &rows[..per];
            let wins = mine.iter().zip(base).filter(|(a, b)| a.result.failures < b.result.failures).count();
            let losses = mine.iter().zip(base).filter(|(a, b)| a.result.failures > b.result.failures).count();
            let mean = |f: &dyn Fn(&SequenceRow) -> f64| mine.iter().map(f).sum::<f64>() / per as f64;
            let processed: usize = mine.iter().map(|r| r.processed).sum();
            let counts_total: usize = mine.iter().map(|r| r.subpeak_total).sum();
            let singles: usize = mine.iter().map(|r| r.single_peak_frames).sum();
            let (mean_subpeaks, single_peak_fraction) = if processed == 0 {
                subpeak_summary(&[])
            } else {
                (counts_total as f64 / processed as f64, singles as f64 / processed as f64)
            };
            VariantSummary {
                name: v.name.clone(),
                brt: v.config.brt_on,
                prp: v.config.prp_on,
                mf: v.config.multiscale_on,
                runs: per,
                failures: mine.iter().map(|r| r.result.failures).sum(),
                success_auc: mean(&|r| r.result.success_auc()),
                precision20: mean(&|r| r.result.curves.precision_at(20)),
                mean_center_error: mean(&|r| r.result.mean_center_error),
                mean_subpeaks,
                single_peak_fraction,
                wins,
                losses,
                sign_p: sign_test_p(wins, losses),
            }
        })
        .collect();
    Ok(AblationReport { summaries, rows })
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

impl AblationReport {
    pub fn summary(&self, name: &str) -> Option<&VariantSummary> {
        self.summaries.iter().find(|s| s.name == name)
    }

    /// Rows of variant `name`, ordered by seed then repeat.
    pub fn rows_of(&self, name: &str) -> Vec<&SequenceRow> {
        let Some(vi) = self.summaries.iter().position(|s| s.name == name) else { return vec![] };
        self.rows.iter().filter(|r| r.variant == vi).collect()
    }

    /// One row per variant.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "variant",
            "brt",
            "prp",
            "mf",
            "runs",
            "failures",
            "success_auc",
            "precision20",
            "mean_center_error",
            "mean_subpeaks",
            "single_peak_fraction",
            "wins",
            "losses",
            "sign_p",
        ])?;
        for s in &self.summaries {
            w.write_record([
                s.name.clone(),
                flag(s.brt).into(),
                flag(s.prp).into(),
                flag(s.mf).into(),
                s.runs.to_string(),
                s.failures.to_string(),
                fmt(s.success_auc),
                fmt(s.precision20),
                fmt(s.mean_center_error),
                fmt(s.mean_subpeaks),
                fmt(s.single_peak_fraction),
                s.wins.to_string(),
                s.losses.to_string(),
                format!("{:.6e}", s.sign_p),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per tracked sequence with failure deltas against the first variant.
    pub fn write_sequences_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "variant",
            "seed",
            "repeat",
            "failures",
            "failures_delta",
            "success_auc",
            "precision20",
            "mean_center_error",
            "mean_subpeaks",
            "single_peak_fraction",
            "frames_scored",
            "frames_processed",
        ])?;
        let per = self.rows.len() / self.summaries.len().max(1);
        for (i, r) in self.rows.iter().enumerate() {
            let base = &self.rows[i % per];
            let delta = r.result.failures as i64 - base.result.failures as i64;
            w.write_record([
                self.summaries[r.variant].name.clone(),
                r.seed.to_string(),
                r.repeat.to_string(),
                r.result.failures.to_string(),
                delta.to_string(),
                fmt(r.result.success_auc()),
                fmt(r.result.curves.precision_at(20)),
                fmt(r.result.mean_center_error),
                fmt(r.result.mean_subpeaks),
                fmt(r.result.single_peak_fraction),
                r.result.frames.to_string(),
                r.processed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
