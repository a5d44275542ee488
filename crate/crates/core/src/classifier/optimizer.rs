use super::objective::Objective;
use super::{ClassifierWeights, SampleMemory};
use crate::error::{ensure, Result};
use crate::peak::FusionWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgVariant {
    /// Polak–Ribière with β clipped at zero.
    PolakRibierePlus,
    FletcherReeves,
}

/// Backtracking (Armijo) line search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    /// Length of the very first trial step along the search direction.
    pub initial_step: f64,
    /// Upper bound on the per-backtrack shrink, in (0, 1).
    pub shrink: f64,
    /// Sufficient-decrease constant `c` in `L(θ+αd) ≤ L(θ) + c·α·∇L·d`.
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self { initial_step: 0.1, shrink: 0.5, sufficient_decrease: 1e-4, max_backtracks: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_outer_iters: usize,
    pub cg_variant: CgVariant,
    pub line_search: LineSearch,
    pub grad_tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 60,
            cg_variant: CgVariant::PolakRibierePlus,
            line_search: LineSearch::default(),
            grad_tolerance: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn with_iters(mut self, iters: usize) -> Self {
        self.max_outer_iters = iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ls = &self.line_search;
        ensure!(
            ls.initial_step > 0.0 && ls.initial_step.is_finite(),
            Parameter,
            "initial step must be positive"
        );
        ensure!(ls.shrink > 0.0 && ls.shrink < 1.0, Parameter, "shrink factor must lie in (0, 1)");
        ensure!(
            ls.sufficient_decrease > 0.0 && ls.sufficient_decrease < 1.0,
            Parameter,
            "sufficient-decrease constant must lie in (0, 1)"
        );
        ensure!(ls.max_backtracks > 0, Parameter, "max_backtracks must be positive");
        ensure!(self.grad_tolerance > 0.0, Parameter, "gradient tolerance must be positive");
        Ok(())
    }
}

/// Outcome of an optimisation run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeReport {
    pub weights: ClassifierWeights,
    /// Loss at the start and after every accepted step.
    pub losses: Vec<f64>,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
}

impl OptimizeReport {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least the initial loss")
    }
}

pub fn optimize(
    w: &ClassifierWeights,
    mem: &SampleMemory,
    cfg: &OptimizerConfig,
    rectified: bool,
    betas: &FusionWeights,
) -> Result<ClassifierWeights> {
    Ok(optimize_with_report(w, mem, cfg, rectified, betas)?.weights)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nonlinear conjugate gradient with restarts and a backtracking line
/// search; every accepted step is asserted not to increase the loss.
pub fn optimize_with_report(
    w: &ClassifierWeights,
    mem: &SampleMemory,
    cfg: &OptimizerConfig,
    rectified: bool,
    betas: &FusionWeights,
) -> Result<OptimizeReport> {
    cfg.validate()?;
    let obj = Objective::new(w, mem, rectified, betas)?;
    let n = obj.num_params();
    let ls = cfg.line_search;

    let mut theta = w.to_params();
    let mut grad = vec![0.0; n];
    let mut loss = obj.value_and_gradient(&theta, &mut grad);
    let mut losses = vec![loss];
    let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut prev_slope = None::<(f64, f64)>; // (alpha, slope) of the last accepted step
    let mut trial = vec![0.0; n];
    let mut new_grad = vec![0.0; n];
    let mut steepest = true;
    let mut iterations = 0;
    let mut restarts = 0;
    let mut converged = false;

    while iterations < cfg.max_outer_iters {
        let gnorm = dot(&grad, &grad).sqrt();
        if gnorm < cfg.grad_tolerance {
            converged = true;
            break;
        }
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            slope = -gnorm * gnorm;
            steepest = true;
            restarts += 1;
        }

        let dnorm = dot(&dir, &dir).sqrt();
        let mut alpha = match prev_slope {
            None => ls.initial_step / dnorm,
            Some((a, s)) => (a * s / slope).clamp(1e-12 / dnorm, 1e6 / dnorm),
        };

        let step = |alpha: f64, trial: &mut Vec<f64>| {
            for ((t, &x), &d) in trial.iter_mut().zip(&theta).zip(&dir) {
                *t = x + alpha * d;
            }
            obj.value(trial)
        };

        let mut accepted = None;
        for _ in 0..ls.max_backtracks {
            let value = step(alpha, &mut trial);
            if value.is_finite() && value <= loss + ls.sufficient_decrease * alpha * slope {
                accepted = Some((alpha, value));
                break;
            }
            // safeguarded quadratic interpolation of the 1-D restriction
            let curv = value - loss - slope * alpha;
            let next = if value.is_finite() && curv > 0.0 {
                -slope * alpha * alpha / (2.0 * curv)
            } else {
                ls.shrink * alpha
            };
            alpha = next.clamp(0.1 * alpha, ls.shrink * alpha);
        }

        let Some((mut alpha, mut value)) = accepted else {
            if steepest {
                // no decrease even along -∇L: numerically converged
                converged = true;
                break;
            }
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            steepest = true;
            prev_slope = None;
            restarts += 1;
            continue;
        };

        // One interpolation refinement: the minimiser of the quadratic
        // through L(0), L'(0) and L(α) is often much better for CG.
        let curv = value - loss - slope * alpha;
        if curv > 0.0 {
            let alpha_q = -slope * alpha * alpha / (2.0 * curv);
            if alpha_q.is_finite() && alpha_q > 0.0 && (alpha_q - alpha).abs() > 1e-3 * alpha {
                let alpha_q = alpha_q.min(10.0 * alpha);
                let vq = step(alpha_q, &mut trial);
                if vq.is_finite() && vq < value && vq <= loss + ls.sufficient_decrease * alpha_q * slope {
                    alpha = alpha_q;
                    value = vq;
                }
            }
        }

        for ((t, &x), &d) in trial.iter_mut().zip(&theta).zip(&dir) {
            *t = x + alpha * d;
        }
        let new_loss = obj.value_and_gradient(&trial, &mut new_grad);
        debug_assert_eq!(new_loss, value);
        assert!(new_loss <= loss, "accepted CG step increased the loss: {loss} -> {new_loss}");

        let beta = match cfg.cg_variant {
            CgVariant::PolakRibierePlus => {
                let num: f64 = new_grad.iter().zip(&grad).map(|(gn, g)| gn * (gn - g)).sum();
                (num / (gnorm * gnorm)).max(0.0)
            }
            CgVariant::FletcherReeves => dot(&new_grad, &new_grad) / (gnorm * gnorm),
        };
        std::mem::swap(&mut theta, &mut trial);
        std::mem::swap(&mut grad, &mut new_grad);
        for (d, g) in dir.iter_mut().zip(&grad) {
            *d = -g + beta * *d;
        }
        steepest = beta == 0.0;
        prev_slope = Some((alpha, slope));
        loss = new_loss;
        losses.push(loss);
        iterations += 1;
    }

    Ok(OptimizeReport { weights: w.with_params(&theta), losses, iterations, restarts, converged })
}
