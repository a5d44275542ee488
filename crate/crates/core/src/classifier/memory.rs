use std::collections::VecDeque;

use crate::error::{ensure, Result};
use crate::grid::{FeatureMap, Grid2D};

/// One training pair `(x_j, y_j)` with its weight γ_j.
///
/// `source` names the response source (feature scale) the sample came from;
/// it selects β_j in the rectified objective.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub features: FeatureMap,
    pub label: Grid2D,
    pub gamma: f64,
    pub source: usize,
}

impl TrainingSample {
    pub fn new(features: FeatureMap, label: Grid2D, source: usize) -> Result<Self> {
        ensure!(
            features.dims() == label.dims(),
            Dimension,
            "label is {:?} but features are {:?}",
            label.dims(),
            features.dims()
        );
        Ok(Self { features, label, gamma: 1.0, source })
    }
}

/// Bounded ring of training samples whose weights always sum to one.
///
/// Each insertion scales the existing weights by `1 - decay`, gives the new
/// sample(s) a combined weight of `decay`, drops the oldest samples beyond
/// capacity and renormalizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMemory {
    capacity: usize,
    decay: f64,
    samples: VecDeque<TrainingSample>,
}

impl SampleMemory {
    pub fn new(capacity: usize, decay: f64) -> Result<Self> {
        ensure!(capacity > 0, Parameter, "memory capacity must be positive");
        ensure!(decay > 0.0 && decay < 1.0, Parameter, "decay must lie in (0, 1), got {decay}");
        Ok(Self { capacity, decay, samples: VecDeque::with_capacity(capacity) })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &TrainingSample> {
        self.samples.iter()
    }

    pub fn get(&self, i: usize) -> Option<&TrainingSample> {
        self.samples.get(i)
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.gamma).collect()
    }

    pub fn insert_sample(&mut self, sample: TrainingSample) -> Result<()> {
        self.insert_batch(vec![sample])
    }

    /// Inserts samples taken at the same time step; they share the `decay`
    /// weight equally.
    pub fn insert_batch(&mut self, batch: Vec<TrainingSample>) -> Result<()> {
        ensure!(!batch.is_empty(), Parameter, "empty sample batch");
        for s in &batch {
            self.check_compatible(s, &batch)?;
        }
        let fresh = self.samples.is_empty();
        if !fresh {
            for s in &mut self.samples {
                s.gamma *= 1.0 - self.decay;
            }
        }
        let share = if fresh { 1.0 } else { self.decay } / batch.len() as f64;
        for mut s in batch {
            s.gamma = share;
            if self.samples.len() == self.capacity {
                self.samples.pop_front();
            }
            self.samples.push_back(s);
        }
        let total: f64 = self.samples.iter().map(|s| s.gamma).sum();
        for s in &mut self.samples {
            s.gamma /= total;
        }
        Ok(())
    }

    fn check_compatible(&self, s: &TrainingSample, batch: &[TrainingSample]) -> Result<()> {
        ensure!(s.features.dims() == s.label.dims(), Dimension, "label/feature dims differ");
        for other in self.samples.iter().chain(batch) {
            ensure!(
                other.features.channels() == s.features.channels(),
                Dimension,
                "sample has {} channels, memory holds {}",
                s.features.channels(),
                other.features.channels()
            );
            if other.source == s.source {
                ensure!(
                    other.features.dims() == s.features.dims(),
                    Dimension,
                    "source {} samples must share dims: {:?} vs {:?}",
                    s.source,
                    s.features.dims(),
                    other.features.dims()
                );
            }
        }
        Ok(())
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    /// Reorders samples (with their weights); used to check that the
    /// objective does not depend on storage order.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.len());
        Self {
            capacity: self.capacity,
            decay: self.decay,
            samples: order.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }
}
