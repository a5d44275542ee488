//! SPSW container for classifier weights.
//!
//! Little-endian layout: magic `SPSW`, `u32` layer count (always 2), then per
//! layer: `u32` out/in channels, `u32` kernel height/width, `u32` activation
//! code (0 identity, 1 leaky rectifier), `f64` leaky slope, `f64` ridge
//! weight λ, then the `f64` weights in `[out][in][ky][kx]` order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Activation, ClassifierWeights};
use crate::error::{ensure, Error, Result};
use crate::grid::ConvKernel;

pub const MAGIC: &[u8; 4] = b"SPSW";

pub fn write_weights<W: Write>(mut out: W, w: &ClassifierWeights) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&2u32.to_le_bytes())?;
    for (k, act, lambda) in [(&w.w1, w.phi1, w.lambda1), (&w.w2, w.phi2, w.lambda2)] {
        for d in [k.out_channels(), k.in_channels(), k.kernel_h(), k.kernel_w()] {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        let (code, slope) = match act {
            Activation::Identity => (0u32, 0.0),
            Activation::LeakyRelu { slope } => (1u32, slope),
        };
        out.write_all(&code.to_le_bytes())?;
        out.write_all(&slope.to_le_bytes())?;
        out.write_all(&lambda.to_le_bytes())?;
        for v in k.weights() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(eof)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(eof)?;
    Ok(f64::from_le_bytes(b))
}

fn eof(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("SPSW file truncated".into())
    } else {
        Error::Io(e)
    }
}

pub fn read_weights<R: Read>(mut input: R) -> Result<ClassifierWeights> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(eof)?;
    ensure!(&magic == MAGIC, Format, "bad SPSW magic {:?}", magic);
    let layers = read_u32(&mut input)?;
    ensure!(layers == 2, Format, "expected 2 layers, found {layers}");
    let mut parsed = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = read_u32(&mut input)? as usize;
        }
        let code = read_u32(&mut input)?;
        let slope = read_f64(&mut input)?;
        let lambda = read_f64(&mut input)?;
        let act = match code {
            0 => Activation::Identity,
            1 => Activation::LeakyRelu { slope },
            other => return Err(Error::Format(format!("unknown activation code {other}"))),
        };
        let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let n = n.filter(|&n| n <= 1 << 26).ok_or_else(|| Error::Format("layer too large".into()))?;
        let weights = (0..n).map(|_| read_f64(&mut input)).collect::<Result<Vec<_>>>()?;
        let kernel = ConvKernel::new(dims[0], dims[1], dims[2], dims[3], weights)
            .map_err(|e| Error::Format(e.to_string()))?;
        parsed.push((kernel, act, lambda));
    }
    let mut b = [0u8; 1];
    ensure!(matches!(input.read(&mut b), Ok(0)), Format, "trailing bytes after SPSW payload");
    let (w2, phi2, lambda2) = parsed.pop().expect("two layers");
    let (w1, phi1, lambda1) = parsed.pop().expect("two layers");
    ClassifierWeights::with_activations(w1, w2, lambda1, lambda2, phi1, phi2)
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn save_weights(path: impl AsRef<Path>, w: &ClassifierWeights) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_weights(&mut out, w)?;
    out.flush()?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<ClassifierWeights> {
    read_weights(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::super::Architecture;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    proptest! {
        #[test]
        fn round_trip_bitwise(seed in 0u64..1000, cin in 1usize..4, cmid in 1usize..4, k in 0usize..2) {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let mut arch = Architecture::new(cin);
            arch.mid_channels = cmid;
            arch.kernel1 = 1 + 2 * k;
            arch.phi2 = Activation::LeakyRelu { slope: 0.2 };
            let w = ClassifierWeights::random(&mut rng, &arch).unwrap();
            let mut buf = Vec::new();
            write_weights(&mut buf, &w).unwrap();
            let back = read_weights(&buf[..]).unwrap();
            let mut buf2 = Vec::new();
            write_weights(&mut buf2, &back).unwrap();
            prop_assert_eq!(&buf, &buf2);
            prop_assert_eq!(back, w);
        }
    }

    #[test]
    fn rejects_corruption() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let w = ClassifierWeights::random(&mut rng, &Architecture::new(2)).unwrap();
        let mut buf = Vec::new();
        write_weights(&mut buf, &w).unwrap();
        assert!(read_weights(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[1] = b'X';
        assert!(read_weights(&bad[..]).is_err());
        let mut bad = buf.clone();
        bad[4] = 3;
        assert!(read_weights(&bad[..]).is_err());
    }
}
