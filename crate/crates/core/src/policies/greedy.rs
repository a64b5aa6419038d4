//! Simple Greedy: explore uniformly for `τ` rounds, fit once, then exploit.

use rand::RngCore;

use super::{uniform_arm, Policy};
use crate::linalg::{argmax, dot, eigendecompose, rank_threshold, truncated_pinv_apply, SymMatrix};

/// Relative eigenvalue cutoff for the pseudo-inverse of a singular `X`.
const PINV_CUTOFF: f64 = 1e-8;

/// `⌊T^{2/3}⌋`, computed exactly as the largest `n` with `n³ ≤ T²`.
pub fn exploration_length(horizon: usize) -> usize {
    let target = (horizon as u128).pow(2);
    let mut n = (horizon as f64).powf(2.0 / 3.0).round() as u128;
    while n.pow(3) > target {
        n -= 1;
    }
    while (n + 1).pow(3) <= target {
        n += 1;
    }
    n as usize
}

/// Pseudo-inverse solve `X⁺Y`, dropping eigenvalues below `1e−8·λ_max`.
pub fn pinv_solve(x: &SymMatrix, y: &[f64]) -> Vec<f64> {
    let e = eigendecompose(x).expect("Gram matrix of finite contexts is finite");
    let top = e.values().first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return vec![0.0; y.len()];
    }
    let k = rank_threshold(&e, PINV_CUTOFF * top);
    truncated_pinv_apply(&e, k, y).expect("kept eigenvalues are positive")
}

#[derive(Debug, Clone)]
pub struct SimpleGreedy {
    arms: usize,
    tau: usize,
    x: SymMatrix,
    y: Vec<f64>,
    theta_hat: Option<Vec<f64>>,
}

impl SimpleGreedy {
    pub fn new(dim: usize, arms: usize, horizon: usize) -> Self {
        Self::with_tau(dim, arms, exploration_length(horizon))
    }

    pub fn with_tau(dim: usize, arms: usize, tau: usize) -> Self {
        Self {
            arms,
            tau,
            x: SymMatrix::zeros(dim),
            y: vec![0.0; dim],
            theta_hat: None,
        }
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn theta_hat(&self) -> Option<&[f64]> {
        self.theta_hat.as_deref()
    }

    /// Fits `θ̂` from the exploration data gathered so far.
    pub fn fit(&mut self) -> &[f64] {
        self.theta_hat.insert(pinv_solve(&self.x, &self.y))
    }
}

impl Policy for SimpleGreedy {
    fn name(&self) -> &'static str {
        "simple_greedy"
    }

    fn select(&mut self, t: usize, contexts: &[Vec<f64>], rng: &mut dyn RngCore) -> usize {
        if t <= self.tau {
            return uniform_arm(self.arms.min(contexts.len()), rng);
        }
        if self.theta_hat.is_none() {
            self.fit();
        }
        let theta = self.theta_hat.as_deref().expect("fitted above");
        let scores: Vec<f64> = contexts.iter().map(|x| dot(x, theta)).collect();
        argmax(&scores).unwrap_or(0)
    }

    fn observe(&mut self, t: usize, _arm: usize, x: &[f64], y: f64, _noise_cov: &SymMatrix) {
        if t > self.tau {
            return;
        }
        self.x.add_outer(x, 1.0);
        for (acc, xi) in self.y.iter_mut().zip(x) {
            *acc += xi * y;
        }
    }

    fn coefficient(&self) -> Option<Vec<f64>> {
        self.theta_hat.clone()
    }
}
