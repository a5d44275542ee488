use super::{forward, Activation, ClassifierWeights, SampleMemory};
use crate::error::{ensure, Result};
use crate::grid::planes::{conv_backward_input, conv_backward_weights, Planes};
use crate::peak::FusionWeights;

/// Gradient of the objective, laid out like the two kernel banks.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl Gradient {
    pub fn flat(&self) -> Vec<f64> {
        self.w1.iter().chain(&self.w2).copied().collect()
    }

    pub fn norm(&self) -> f64 {
        self.w1.iter().chain(&self.w2).map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// `Σ_j γ_j ‖r_j − y_j‖² + λ1‖w1‖² + λ2‖w2‖²` where `r_j = f(x_j)` or, when
/// `rectified`, `r_j = β_j·(f(x_j) + prp(f(x_j)))`.
pub fn loss(w: &ClassifierWeights, mem: &SampleMemory, rectified: bool, betas: &FusionWeights) -> Result<f64> {
    let obj = Objective::new(w, mem, rectified, betas)?;
    Ok(obj.value(&w.to_params()))
}

/// Exact gradient of [`loss`]. Pooling routes each row (column) maximum's
/// gradient to its first maximizing cell.
pub fn gradient(
    w: &ClassifierWeights,
    mem: &SampleMemory,
    rectified: bool,
    betas: &FusionWeights,
) -> Result<Gradient> {
    let obj = Objective::new(w, mem, rectified, betas)?;
    let mut g = vec![0.0; w.num_params()];
    obj.value_and_gradient(&w.to_params(), &mut g);
    let n1 = w.w1.weights().len();
    Ok(Gradient { w1: g[..n1].to_vec(), w2: g[n1..].to_vec() })
}

struct Prepared {
    x: Planes,
    y: Vec<f64>,
    gamma: f64,
    beta: f64,
}

/// The objective for a frozen memory, evaluated on flat parameter vectors.
pub(crate) struct Objective<'a> {
    template: &'a ClassifierWeights,
    samples: Vec<Prepared>,
    rectified: bool,
}

impl<'a> Objective<'a> {
    pub fn new(
        w: &'a ClassifierWeights,
        mem: &SampleMemory,
        rectified: bool,
        betas: &FusionWeights,
    ) -> Result<Self> {
        ensure!(!mem.is_empty(), State, "sample memory is empty");
        let beta_hat = betas.normalized();
        let mut samples = Vec::with_capacity(mem.len());
        for s in mem.samples() {
            ensure!(
                s.features.channels() == w.in_channels(),
                Dimension,
                "sample has {} channels, classifier expects {}",
                s.features.channels(),
                w.in_channels()
            );
            ensure!(
                s.source < beta_hat.len(),
                Parameter,
                "sample source {} has no fusion weight ({} given)",
                s.source,
                beta_hat.len()
            );
            samples.push(Prepared {
                x: Planes::from_feature_map(&s.features),
                y: s.label.values().iter().map(|&v| v as f64).collect(),
                gamma: s.gamma,
                beta: beta_hat[s.source],
            });
        }
        Ok(Self { template: w, samples, rectified })
    }

    pub fn num_params(&self) -> usize {
        self.template.num_params()
    }

    fn regularizer(&self, params: &[f64]) -> f64 {
        let n1 = self.template.w1.weights().len();
        let r1: f64 = params[..n1].iter().map(|v| v * v).sum();
        let r2: f64 = params[n1..].iter().map(|v| v * v).sum();
        self.template.lambda1 * r1 + self.template.lambda2 * r2
    }

    /// Sum of per-sample terms in a canonical (sorted) order so the value does
    /// not depend on how the memory is ordered.
    fn total(&self, mut terms: Vec<f64>, params: &[f64]) -> f64 {
        terms.sort_by(|a, b| a.total_cmp(b));
        terms.iter().sum::<f64>() + self.regularizer(params)
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let terms = self
            .samples
            .iter()
            .map(|s| {
                let fwd = forward(self.template, params, &s.x);
                let r = self.response(&fwd.f, s.beta);
                s.gamma * r.iter().zip(&s.y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            })
            .collect();
        self.total(terms, params)
    }

    fn response(&self, f: &Planes, beta: f64) -> Vec<f64> {
        if !self.rectified {
            return f.data.clone();
        }
        let pool = Pooling::new(f);
        let w = f.width;
        f.data
            .iter()
            .enumerate()
            .map(|(i, &v)| beta * (v + pool.row_max[i / w] + pool.col_max[i % w]))
            .collect()
    }

    /// Returns the loss and overwrites `grad` with its gradient.
    pub fn value_and_gradient(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let t = self.template;
        let n1 = t.w1.weights().len();
        grad.fill(0.0);
        let mut terms = Vec::with_capacity(self.samples.len());
        let mut df = Planes::zeros(0, 0, 0);
        let mut da1 = Planes::zeros(0, 0, 0);
        for s in &self.samples {
            let fwd = forward(t, params, &s.x);
            let (h, w) = (fwd.f.height, fwd.f.width);
            df = if df.height == h && df.width == w { df } else { Planes::zeros(1, h, w) };
            let mut term = 0.0;
            if self.rectified {
                let pool = Pooling::new(&fwd.f);
                let mut row_acc = vec![0.0; h];
                let mut col_acc = vec![0.0; w];
                for (i, &fv) in fwd.f.data.iter().enumerate() {
                    let (p, q) = (i / w, i % w);
                    let r = s.beta * (fv + pool.row_max[p] + pool.col_max[q]);
                    let e = r - s.y[i];
                    term += e * e;
                    let dr = 2.0 * s.gamma * e * s.beta;
                    df.data[i] = dr;
                    row_acc[p] += dr;
                    col_acc[q] += dr;
                }
                for p in 0..h {
                    df.data[p * w + pool.row_arg[p]] += row_acc[p];
                }
                for q in 0..w {
                    df.data[pool.col_arg[q] * w + q] += col_acc[q];
                }
            } else {
                for (i, &fv) in fwd.f.data.iter().enumerate() {
                    let e = fv - s.y[i];
                    term += e * e;
                    df.data[i] = 2.0 * s.gamma * e;
                }
            }
            terms.push(s.gamma * term);

            // back through φ2
            if t.phi2 != Activation::Identity {
                for (d, &z) in df.data.iter_mut().zip(&fwd.z2.data) {
                    *d *= t.phi2.derivative(z);
                }
            }
            conv_backward_weights(&fwd.a1, &df, t.w2.shape(), &mut grad[n1..]);
            conv_backward_input(&df, t.w2.shape(), &params[n1..], &mut da1);
            if t.phi1 != Activation::Identity {
                for (d, &z) in da1.data.iter_mut().zip(&fwd.z1.data) {
                    *d *= t.phi1.derivative(z);
                }
            }
            conv_backward_weights(&s.x, &da1, t.w1.shape(), &mut grad[..n1]);
        }
        for (g, &p) in grad[..n1].iter_mut().zip(&params[..n1]) {
            *g += 2.0 * t.lambda1 * p;
        }
        for (g, &p) in grad[n1..].iter_mut().zip(&params[n1..]) {
            *g += 2.0 * t.lambda2 * p;
        }
        self.total(terms, params)
    }

    /// Distance to the nearest non-smooth point of the objective: the
    /// smallest |pre-activation| of a leaky layer and the smallest gap between
    /// a row/column maximum and the runner-up (rectified mode only).
    pub fn kink_margin(&self, params: &[f64]) -> KinkMargin {
        let t = self.template;
        let mut margin = KinkMargin { preactivation: f64::INFINITY, argmax_gap: f64::INFINITY };
        for s in &self.samples {
            let fwd = forward(t, params, &s.x);
            if matches!(t.phi1, Activation::LeakyRelu { .. }) {
                for &z in &fwd.z1.data {
                    margin.preactivation = margin.preactivation.min(z.abs());
                }
            }
            if matches!(t.phi2, Activation::LeakyRelu { .. }) {
                for &z in &fwd.z2.data {
                    margin.preactivation = margin.preactivation.min(z.abs());
                }
            }
            if self.rectified {
                margin.argmax_gap = margin.argmax_gap.min(Pooling::min_gap(&fwd.f));
            }
        }
        margin
    }
}

/// How far an instance sits from the objective's kinks; see
/// [`kink_margin`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkMargin {
    pub preactivation: f64,
    pub argmax_gap: f64,
}

/// Kink margin of the objective at the given weights, for finite-difference
/// checks that must stay on one smooth piece.
pub fn kink_margin(
    w: &ClassifierWeights,
    mem: &SampleMemory,
    rectified: bool,
    betas: &FusionWeights,
) -> Result<KinkMargin> {
    Ok(Objective::new(w, mem, rectified, betas)?.kink_margin(&w.to_params()))
}

/// Row/column maxima with first-index argmax.
struct Pooling {
    row_max: Vec<f64>,
    row_arg: Vec<usize>,
    col_max: Vec<f64>,
    col_arg: Vec<usize>,
}

impl Pooling {
    fn new(f: &Planes) -> Self {
        let (h, w) = (f.height, f.width);
        let mut row_max = vec![f64::NEG_INFINITY; h];
        let mut row_arg = vec![0; h];
        let mut col_max = vec![f64::NEG_INFINITY; w];
        let mut col_arg = vec![0; w];
        for p in 0..h {
            for q in 0..w {
                let v = f.data[p * w + q];
                if v > row_max[p] {
                    row_max[p] = v;
                    row_arg[p] = q;
                }
                if v > col_max[q] {
                    col_max[q] = v;
                    col_arg[q] = p;
                }
            }
        }
        Self { row_max, row_arg, col_max, col_arg }
    }

    fn min_gap(f: &Planes) -> f64 {
        let (h, w) = (f.height, f.width);
        let gap = |vals: &mut dyn Iterator<Item = f64>| {
            let (mut a, mut b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for v in vals {
                if v > a {
                    b = a;
                    a = v;
                } else if v > b {
                    b = v;
                }
            }
            a - b
        };
        let mut m = f64::INFINITY;
        if w > 1 {
            for p in 0..h {
                m = m.min(gap(&mut (0..w).map(|q| f.data[p * w + q])));
            }
        }
        if h > 1 {
            for q in 0..w {
                m = m.min(gap(&mut (0..h).map(|p| f.data[p * w + q])));
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::super::{predict, Architecture, TrainingSample};
    use super::*;
    use crate::grid::{ConvKernel, FeatureMap, Grid2D};
    use crate::peak::rectify;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn random_setup(seed: u64, n: usize, c: usize, hw: usize) -> (ClassifierWeights, SampleMemory) {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut arch = Architecture::new(c);
        arch.mid_channels = 3;
        arch.lambda1 = 0.03;
        arch.lambda2 = 0.07;
        let w = ClassifierWeights::random(&mut rng, &arch).unwrap();
        let mut mem = SampleMemory::new(10, 0.3).unwrap();
        for _ in 0..n {
            let x = FeatureMap::new(
                (0..c).map(|_| Grid2D::from_fn(hw, hw, |_, _| rng.gen_range(-1.0..1.0))).collect(),
            )
            .unwrap();
            let y = Grid2D::from_fn(hw, hw, |_, _| rng.gen_range(0.0..1.0));
            mem.insert_sample(TrainingSample::new(x, y, 0).unwrap()).unwrap();
        }
        (w, mem)
    }

    /// Recomputes the loss from its definition with the public operators.
    fn spreadsheet_loss(w: &ClassifierWeights, mem: &SampleMemory, rectified: bool, beta: f64) -> f64 {
        let mut total = w.lambda1 * w.w1.norm_sq() + w.lambda2 * w.w2.norm_sq();
        for s in mem.samples() {
            let f = predict(w, &s.features).unwrap();
            let r: Vec<f64> = if rectified {
                rectify(&f).values().iter().map(|&v| beta * v as f64).collect()
            } else {
                f.values().iter().map(|&v| v as f64).collect()
            };
            total += s.gamma
                * r.iter().zip(s.label.values()).map(|(a, &b)| (a - b as f64).powi(2)).sum::<f64>();
        }
        total
    }

    #[test]
    fn zero_weights_loss_is_label_energy() {
        let (mut w, mem) = random_setup(1, 3, 2, 6);
        w.set_params(&vec![0.0; w.num_params()]);
        let expected: f64 = mem
            .samples()
            .map(|s| s.gamma * s.label.values().iter().map(|&v| (v as f64).powi(2)).sum::<f64>())
            .sum();
        for rectified in [false, true] {
            let l = loss(&w, &mem, rectified, &FusionWeights::uniform(1)).unwrap();
            assert!((l - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn exact_fit_leaves_regularizer() {
        let (w, mut mem) = random_setup(2, 0, 2, 5);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
        for _ in 0..3 {
            let x = FeatureMap::new(
                (0..2).map(|_| Grid2D::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0))).collect(),
            )
            .unwrap();
            // label equal to the prediction up to f32 rounding of the label
            let y = predict(&w, &x).unwrap();
            mem.insert_sample(TrainingSample::new(x, y, 0).unwrap()).unwrap();
        }
        let mut w = w;
        w.lambda1 = 0.05;
        w.lambda2 = 0.05;
        let l = loss(&w, &mem, false, &FusionWeights::uniform(1)).unwrap();
        let reg = 0.05 * (w.w1.norm_sq() + w.w2.norm_sq());
        assert!((l - reg).abs() < 1e-9, "{l} vs {reg}");
        let g = gradient(&w, &mem, false, &FusionWeights::uniform(1)).unwrap();
        for (gi, wi) in g.w1.iter().zip(w.w1.weights()) {
            assert!((gi - 0.1 * wi).abs() < 1e-6);
        }
        for (gi, wi) in g.w2.iter().zip(w.w2.weights()) {
            assert!((gi - 0.1 * wi).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_weights_zero_labels_zero_gradient() {
        let w1 = ConvKernel::zeros(3, 2, 3, 3).unwrap();
        let w2 = ConvKernel::zeros(1, 3, 3, 3).unwrap();
        let w = ClassifierWeights::new(w1, w2, 0.1, 0.1).unwrap();
        let mut mem = SampleMemory::new(3, 0.1).unwrap();
        let x = FeatureMap::new(vec![Grid2D::filled(4, 4, 1.0), Grid2D::filled(4, 4, -0.5)]).unwrap();
        mem.insert_sample(TrainingSample::new(x, Grid2D::zeros(4, 4), 0).unwrap()).unwrap();
        for rectified in [false, true] {
            let g = gradient(&w, &mem, rectified, &FusionWeights::uniform(1)).unwrap();
            assert!(g.flat().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn matches_spreadsheet_oracle() {
        for seed in 0..8 {
            let (w, mem) = random_setup(seed, 3, 2, 6);
            for rectified in [false, true] {
                let l = loss(&w, &mem, rectified, &FusionWeights::uniform(1)).unwrap();
                let o = spreadsheet_loss(&w, &mem, rectified, 1.0);
                assert!((l - o).abs() / o < 1e-6, "{l} vs {o}");
            }
        }
    }

    #[test]
    fn empty_memory_is_state_error() {
        let (w, _) = random_setup(3, 0, 2, 4);
        let mem = SampleMemory::new(2, 0.1).unwrap();
        assert!(matches!(loss(&w, &mem, false, &FusionWeights::uniform(1)), Err(crate::Error::State(_))));
        assert!(gradient(&w, &mem, true, &FusionWeights::uniform(1)).is_err());
    }

    #[test]
    fn order_invariant() {
        let (w, mem) = random_setup(4, 5, 2, 5);
        let l = loss(&w, &mem, true, &FusionWeights::uniform(1)).unwrap();
        for order in [[4, 3, 2, 1, 0], [1, 0, 3, 2, 4], [2, 4, 0, 1, 3]] {
            let p = mem.permuted(&order);
            assert_eq!(loss(&w, &p, true, &FusionWeights::uniform(1)).unwrap(), l);
        }
    }

    fn finite_difference_check(seed: u64, rectified: bool) -> f64 {
        let (w, mem) = random_setup(seed, 2, 3, 7);
        let obj = Objective::new(&w, &mem, rectified, &FusionWeights::uniform(1)).unwrap();
        let p = w.to_params();
        let mut g = vec![0.0; p.len()];
        obj.value_and_gradient(&p, &mut g);
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for i in 0..p.len() {
            let mut a = p.clone();
            a[i] += h;
            let mut b = p.clone();
            b[i] -= h;
            let fd = (obj.value(&a) - obj.value(&b)) / (2.0 * h);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut checked = 0;
        for seed in 0..40u64 {
            let (w, mem) = random_setup(seed, 2, 3, 7);
            for rectified in [false, true] {
                let m = kink_margin(&w, &mem, rectified, &FusionWeights::uniform(1)).unwrap();
                if m.preactivation < 1e-3 || m.argmax_gap < 1e-3 {
                    continue;
                }
                let worst = finite_difference_check(seed, rectified);
                assert!(worst < 1e-5, "seed {seed} rectified {rectified}: {worst}");
                checked += 1;
            }
        }
        assert!(checked >= 10, "only {checked} kink-free instances");
    }
}
