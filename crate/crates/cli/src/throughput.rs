//! `subpeak bench`: wall-clock throughput of the core kernels.

use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use subpeak_core::classifier::{gradient, predict, Architecture, ClassifierWeights, SampleMemory, TrainingSample};
use subpeak_core::grid::{conv2d_mc, make_gaussian_label};
use subpeak_core::peak::{brt, prp, FusionWeights};
use subpeak_core::{ConvKernel, FeatureMap, Grid2D, Result};

const SIDE: usize = 64;
const CHANNELS: usize = 8;

fn random_grid(rng: &mut Xoshiro256PlusPlus, h: usize, w: usize) -> Grid2D {
    Grid2D::from_fn(h, w, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_features(rng: &mut Xoshiro256PlusPlus, c: usize, h: usize, w: usize) -> Result<FeatureMap> {
    FeatureMap::new((0..c).map(|_| random_grid(rng, h, w)).collect())
}

/// Mean seconds per call of `f` over `reps` calls, after one warm-up call.
fn time<T>(reps: usize, mut f: impl FnMut() -> T) -> f64 {
    black_box(f());
    let start = Instant::now();
    for _ in 0..reps {
        black_box(f());
    }
    start.elapsed().as_secs_f64() / reps as f64
}

pub fn run(reps: usize) -> Result<()> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
    let g = random_grid(&mut rng, SIDE, SIDE);
    let x = random_features(&mut rng, CHANNELS, SIDE, SIDE)?;
    let kernel = ConvKernel::from_fn(CHANNELS, CHANNELS, 3, 3, |_, _, _, _| rng.gen_range(-0.5..0.5))?;
    let weights = ClassifierWeights::random(&mut rng, &Architecture::new(CHANNELS))?;

    let small = random_features(&mut rng, CHANNELS, SIDE / 2, SIDE / 2)?;
    let label = make_gaussian_label(SIDE / 2, SIDE / 2, (16.0, 16.0), 2.0)?;
    let mut memory = SampleMemory::new(1, 0.2)?;
    memory.insert_sample(TrainingSample::new(small, label, 0)?)?;
    let betas = FusionWeights::uniform(1);

    let shape = format!("{SIDE}x{SIDE}");
    let cshape = format!("{CHANNELS}x{SIDE}x{SIDE}");
    let gshape = format!("{CHANNELS}x{}x{}", SIDE / 2, SIDE / 2);
    let rows = [
        ("conv3x3", cshape.as_str(), time(reps, || conv2d_mc(&x, &kernel))),
        ("prp", shape.as_str(), time(reps, || prp(&g))),
        ("brt", shape.as_str(), time(reps, || brt(&g, (20, 40), 0.1))),
        ("predict", cshape.as_str(), time(reps, || predict(&weights, &x))),
        ("gradient", gshape.as_str(), time(reps, || gradient(&weights, &memory, true, &betas))),
    ];
    println!("{:<10} {:>12} {:>14} {:>14}", "kernel", "input", "us/call", "calls/s");
    for (name, input, secs) in rows {
        println!("{:<10} {:>12} {:>14.2} {:>14.0}", name, input, secs * 1e6, 1.0 / secs);
    }
    Ok(())
}
