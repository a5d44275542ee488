//! SPSF raster container.
//!
//! Layout (all little-endian): the 4 magic bytes `SPSF`, then `u32` channel
//! count `C`, height `H`, width `W`, then `C·H·W` IEEE-754 `f32` values in
//! channel-major, row-major order. A [`Grid2D`] is stored as `C == 1`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{FeatureMap, Grid2D};
use crate::error::{ensure, Error, Result};

pub const MAGIC: &[u8; 4] = b"SPSF";

pub fn write_feature_map<W: Write>(mut out: W, map: &FeatureMap) -> Result<()> {
    out.write_all(MAGIC)?;
    for dim in [map.channels(), map.height(), map.width()] {
        let dim = u32::try_from(dim).map_err(|_| Error::Format("dimension exceeds u32".into()))?;
        out.write_all(&dim.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(map.channels() * map.height() * map.width() * 4);
    for g in map.grids() {
        for v in g.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_feature_map<R: Read>(mut input: R) -> Result<FeatureMap> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(|e| truncated(e, "magic"))?;
    ensure!(&magic == MAGIC, Format, "bad SPSF magic {:?}", magic);
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let mut b = [0u8; 4];
        input.read_exact(&mut b).map_err(|e| truncated(e, "header"))?;
        *d = u32::from_le_bytes(b) as usize;
    }
    let [c, h, w] = dims;
    ensure!(c > 0 && h > 0 && w > 0, Format, "SPSF dims must be positive, got {c}x{h}x{w}");
    let n = c
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .filter(|&n| n <= (1 << 30))
        .ok_or_else(|| Error::Format(format!("SPSF payload too large: {c}x{h}x{w}")))?;
    let mut bytes = vec![0u8; n * 4];
    input.read_exact(&mut bytes).map_err(|e| truncated(e, "payload"))?;
    let mut trailing = [0u8; 1];
    ensure!(
        matches!(input.read(&mut trailing), Ok(0)),
        Format,
        "trailing bytes after SPSF payload"
    );
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    ensure!(values.iter().all(|v| v.is_finite()), Format, "SPSF payload contains non-finite values");
    let grids = values
        .chunks_exact(h * w)
        .map(|chunk| Grid2D::from_raw(h, w, chunk.to_vec()))
        .collect();
    Ok(FeatureMap::from_grids_unchecked(grids))
}

fn truncated(e: std::io::Error, what: &str) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format(format!("SPSF truncated in {what}"))
    } else {
        Error::Io(e)
    }
}

pub fn write_grid<W: Write>(out: W, g: &Grid2D) -> Result<()> {
    write_feature_map(out, &FeatureMap::single(g.clone()))
}

pub fn read_grid<R: Read>(input: R) -> Result<Grid2D> {
    let map = read_feature_map(input)?;
    ensure!(map.channels() == 1, Format, "expected a single-channel SPSF, got {}", map.channels());
    Ok(map.into_grids().remove(0))
}

pub fn save_feature_map(path: impl AsRef<Path>, map: &FeatureMap) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_feature_map(&mut w, map)?;
    w.flush()?;
    Ok(())
}

pub fn load_feature_map(path: impl AsRef<Path>) -> Result<FeatureMap> {
    read_feature_map(BufReader::new(File::open(path)?))
}
