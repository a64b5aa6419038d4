//! Universal-NLinRel and Oracle-GD.
//!
//! Both keep a decision vector `θ` that takes one stochastic gradient step
//! per round on the per-round regret, evaluated on a sampled feature set
//! with a target coefficient standing in for `θ*`. Universal-NLinRel takes
//! the target from an NLinRel estimate `θ†` and adds a residual-subspace
//! bonus to its scores; Oracle-GD uses `θ*` itself and no bonus.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::nlinrel::{Estimate, NLinRelEstimator};
use super::{ContextSource, Policy};
use crate::env::EnvError;
use crate::gradient::{GradientConfig, RegretObjective};
use crate::linalg::{argmax, dot, norm, SymMatrix};

pub const DEFAULT_STEP_SIZE: f64 = 0.05;
pub const DEFAULT_UCB_COEFF: f64 = 0.25;
pub const DEFAULT_MC_SAMPLES: usize = 100;

#[derive(Debug, Clone)]
enum Target {
    Estimated { estimator: NLinRelEstimator, ucb_coeff: f64 },
    Known(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct Universal {
    target: Target,
    theta: Vec<f64>,
    step_size: f64,
    objective: RegretObjective,
    contexts: ContextSource,
    skipped_steps: usize,
}

/// Uniform draw from the unit sphere.
pub fn random_unit_vector(dim: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl Universal {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dim: usize,
        alpha_exponent: f64,
        step_size: f64,
        ucb_coeff: f64,
        noise_cov: &SymMatrix,
        gradient: GradientConfig,
        contexts: ContextSource,
        init_rng: &mut dyn RngCore,
    ) -> Result<Self, EnvError> {
        Ok(Self {
            target: Target::Estimated {
                estimator: NLinRelEstimator::new(dim, alpha_exponent),
                ucb_coeff,
            },
            theta: random_unit_vector(dim, init_rng),
            step_size,
            objective: RegretObjective::new(noise_cov, gradient)?,
            contexts,
            skipped_steps: 0,
        })
    }

    /// Oracle-GD: the gradient target is `θ*` and there is no bonus.
    pub fn oracle(
        theta_star: Vec<f64>,
        step_size: f64,
        noise_cov: &SymMatrix,
        gradient: GradientConfig,
        contexts: ContextSource,
        init_rng: &mut dyn RngCore,
    ) -> Result<Self, EnvError> {
        let dim = theta_star.len();
        Ok(Self {
            target: Target::Known(theta_star),
            theta: random_unit_vector(dim, init_rng),
            step_size,
            objective: RegretObjective::new(noise_cov, gradient)?,
            contexts,
            skipped_steps: 0,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn set_theta(&mut self, theta: Vec<f64>) {
        self.theta = theta;
    }

    /// Gradient steps dropped because the estimate was not finite.
    pub fn skipped_steps(&self) -> usize {
        self.skipped_steps
    }

    fn gradient_step(&mut self, target: &[f64], contexts: &[Vec<f64>], rng: &mut dyn RngCore) {
        if self.step_size == 0.0 {
            return;
        }
        let sampled;
        let z = match &self.contexts {
            ContextSource::Distribution(sampler) => {
                sampled = sampler.sample_arms(contexts.len(), rng);
                &sampled
            }
            ContextSource::CurrentContexts => contexts,
        };
        let g = self.objective.gradient(&self.theta, z, target, rng);
        if g.iter().all(|v| v.is_finite()) {
            for (t, gj) in self.theta.iter_mut().zip(&g) {
                *t -= self.step_size * gj;
            }
        } else {
            self.skipped_steps += 1;
        }
    }
}

impl Policy for Universal {
    fn name(&self) -> &'static str {
        match self.target {
            Target::Estimated { .. } => "universal_nlinrel",
            Target::Known(_) => "oracle_gd",
        }
    }

    fn is_oracle(&self) -> bool {
        matches!(self.target, Target::Known(_))
    }

    fn select(&mut self, t: usize, contexts: &[Vec<f64>], rng: &mut dyn RngCore) -> usize {
        match &self.target {
            Target::Estimated { estimator, ucb_coeff } => {
                let ucb = *ucb_coeff;
                let est: Estimate = estimator.estimate(t);
                self.gradient_step(&est.theta, contexts, rng);
                let scores: Vec<f64> = contexts
                    .iter()
                    .map(|x| {
                        let bonus = if ucb > 0.0 { ucb * est.residual_norm(x) } else { 0.0 };
                        dot(x, &self.theta) + bonus
                    })
                    .collect();
                argmax(&scores).unwrap_or(0)
            }
            Target::Known(theta_star) => {
                let target = theta_star.clone();
                self.gradient_step(&target, contexts, rng);
                let scores: Vec<f64> = contexts.iter().map(|x| dot(x, &self.theta)).collect();
                argmax(&scores).unwrap_or(0)
            }
        }
    }

    fn observe(&mut self, _t: usize, _arm: usize, x: &[f64], y: f64, noise_cov: &SymMatrix) {
        if let Target::Estimated { estimator, .. } = &mut self.target {
            estimator.update(x, y, noise_cov);
        }
    }

    fn coefficient(&self) -> Option<Vec<f64>> {
        Some(self.theta.clone())
    }
}
