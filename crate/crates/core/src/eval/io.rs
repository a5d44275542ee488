//! Heatmaps, ground-truth and run CSVs, and scene directories.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::bbox::BBox;
use crate::config::{scene_to_string, ConfigFile};
use crate::error::{ensure, Error, Result};
use crate::grid::spsf::{load_feature_map, save_feature_map};
use crate::grid::{FeatureMap, Grid2D};
use crate::sim::{ground_truth, render_features, ScaleSpec, SceneConfig, Sequence};

/// 8-bit grey levels after affine min-max normalisation; a constant grid maps to 0.
pub fn heatmap_bytes(g: &Grid2D) -> Vec<u8> {
    let (lo, hi) = g.min_max();
    let (lo, hi) = (lo as f64, hi as f64);
    g.values()
        .iter()
        .map(|&v| if hi > lo { ((v as f64 - lo) / (hi - lo) * 255.0).round() as u8 } else { 0 })
        .collect()
}

pub fn write_pgm<W: Write>(mut out: W, g: &Grid2D) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", g.width(), g.height())?;
    out.write_all(&heatmap_bytes(g))?;
    Ok(())
}

/// Writes `path` as a binary PGM and, when `csv_path` is given, the raw
/// values as CSV (one grid row per line).
pub fn export_heatmap(g: &Grid2D, path: impl AsRef<Path>, csv_path: Option<&Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_pgm(&mut out, g)?;
    out.flush()?;
    if let Some(p) = csv_path {
        write_grid_csv(File::create(p)?, g)?;
    }
    Ok(())
}

pub fn write_grid_csv<W: Write>(out: W, g: &Grid2D) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in g.rows() {
        // `{}` on f32 prints the shortest string that round-trips
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_csv<R: Read>(input: R) -> Result<Grid2D> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows: Vec<Vec<f32>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f32>().map_err(|_| Error::Format(format!("bad grid value {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Grid2D::from_rows(&rows).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_boxes_csv<W: Write>(out: W, boxes: &[BBox]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frame", "cx", "cy", "h", "w"])?;
    for (t, b) in boxes.iter().enumerate() {
        w.write_record([t.to_string(), b.cx.to_string(), b.cy.to_string(), b.h.to_string(), b.w.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| Error::Format(format!("missing CSV column {name:?}")))
}

/// Reads `(frame, box)` pairs from any CSV with `frame, cx, cy, h, w` columns.
pub fn read_boxes_csv<R: Read>(input: R) -> Result<Vec<(usize, BBox)>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let (f, cx, cy, h, w) = (
        column(&headers, "frame")?,
        column(&headers, "cx")?,
        column(&headers, "cy")?,
        column(&headers, "h")?,
        column(&headers, "w")?,
    );
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Format(format!("bad number in record {:?}", rec)))
        };
        let frame = rec
            .get(f)
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Format(format!("bad frame index in record {rec:?}")))?;
        out.push((frame, BBox::new(num(cx)?, num(cy)?, num(h)?, num(w)?)));
    }
    Ok(out)
}

pub fn frame_file(dir: &Path, frame: usize, scale: usize) -> PathBuf {
    dir.join(format!("frame_{frame:04}_s{scale}.spsf"))
}

/// Writes every frame at every scale as SPSF, plus `gt.csv` and `scene.cfg`.
pub fn export_scene(seq: &Sequence, scales: &ScaleSpec, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for t in 0..seq.len() {
        for (s, map) in render_features(seq, t, scales)?.iter().enumerate() {
            save_feature_map(frame_file(dir, t, s), map)?;
        }
    }
    write_boxes_csv(File::create(dir.join("gt.csv"))?, &ground_truth(seq))?;
    fs::write(dir.join("scene.cfg"), scene_to_string(seq.config(), scales))?;
    Ok(())
}

/// A scene directory written by [`export_scene`].
#[derive(Debug, Clone)]
pub struct SceneDir {
    pub dir: PathBuf,
    pub config: SceneConfig,
    pub scales: ScaleSpec,
    pub gt: Vec<BBox>,
}

impl SceneDir {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let (config, scales) = ConfigFile::load(dir.join("scene.cfg"))?.scene()?;
        let rows = read_boxes_csv(File::open(dir.join("gt.csv"))?)?;
        ensure!(rows.len() == config.frames, Format, "gt.csv has {} rows for {} frames", rows.len(), config.frames);
        ensure!(rows.iter().enumerate().all(|(i, r)| r.0 == i), Format, "gt.csv frames must be 0, 1, 2, ...");
        let gt = rows.into_iter().map(|r| r.1).collect();
        Ok(Self { dir, config, scales, gt })
    }

    pub fn frames(&self) -> usize {
        self.config.frames
    }

    pub fn load_frame(&self, frame: usize) -> Result<Vec<FeatureMap>> {
        (0..self.scales.len()).map(|s| load_feature_map(frame_file(&self.dir, frame, s))).collect()
    }
}
