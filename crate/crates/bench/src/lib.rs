//! Seeded inputs shared by the kernel benchmarks.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use subpeak_core::classifier::{Architecture, ClassifierWeights, SampleMemory, TrainingSample};
use subpeak_core::grid::make_gaussian_label;
use subpeak_core::{ConvKernel, FeatureMap, Grid2D};

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn grid(rng: &mut impl Rng, side: usize) -> Grid2D {
    Grid2D::from_fn(side, side, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn features(rng: &mut impl Rng, channels: usize, side: usize) -> FeatureMap {
    FeatureMap::new((0..channels).map(|_| grid(rng, side)).collect()).expect("equal channel dims")
}

pub fn kernel(rng: &mut impl Rng, out: usize, input: usize, k: usize) -> ConvKernel {
    ConvKernel::from_fn(out, input, k, k, |_, _, _, _| rng.gen_range(-0.5..0.5)).expect("valid kernel")
}

pub fn weights(rng: &mut impl Rng, channels: usize) -> ClassifierWeights {
    ClassifierWeights::random(rng, &Architecture::new(channels)).expect("valid architecture")
}

/// Memory with `n` random samples labelled at the map center.
pub fn memory(rng: &mut impl Rng, n: usize, channels: usize, side: usize) -> SampleMemory {
    let mut mem = SampleMemory::new(n.max(1), 0.2).expect("valid memory");
    let c = (side / 2) as f64;
    for _ in 0..n {
        let label = make_gaussian_label(side, side, (c, c), side as f64 / 16.0).expect("valid label");
        mem.insert_sample(TrainingSample::new(features(rng, channels, side), label, 0).expect("matching dims"))
            .expect("insert");
    }
    mem
}
