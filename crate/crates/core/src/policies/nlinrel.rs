//! NLinRel: eigenvalue-thresholded regression with pairwise confidence widths.
//!
//! The estimator keeps `Z(t) = Σ (x xᵀ − Σ_noise)` and `Y(t) = Σ x·y` over
//! the played arms. At round `t` it inverts `Z(t−1)` only along
//! eigendirections whose eigenvalue is at least `t^α`; the remaining
//! directions are unexplored and contribute the width
//! `w_{i,j} = ‖U_{k+1:d}ᵀ(x_i − x_j)‖₂`. Because the width depends on
//! feature differences, shared noise cancels out of it.

use rand::{Rng, RngCore};

use super::Policy;
use crate::linalg::{self, eigendecompose, rank_threshold, truncated_pinv_apply, SymEigen, SymMatrix};

/// Default threshold exponent α.
pub const DEFAULT_ALPHA_EXPONENT: f64 = 5.0 / 8.0;

/// Running `Z`/`Y` statistics shared by NLinRel and Universal-NLinRel.
#[derive(Debug, Clone)]
pub struct NLinRelEstimator {
    z: SymMatrix,
    y: Vec<f64>,
    alpha: f64,
    updates: usize,
}

/// Output of one estimation step.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub eigen: SymEigen,
    /// Number of eigendirections at or above the threshold.
    pub rank: usize,
    pub theta: Vec<f64>,
}

impl Estimate {
    pub fn residual_norm(&self, v: &[f64]) -> f64 {
        linalg::residual_projection_norm(&self.eigen, self.rank, v)
    }
}

impl NLinRelEstimator {
    pub fn new(dim: usize, alpha: f64) -> Self {
        Self {
            z: SymMatrix::zeros(dim),
            y: vec![0.0; dim],
            alpha,
            updates: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn z(&self) -> &SymMatrix {
        &self.z
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    /// `Z += x xᵀ − Σ_noise`, `Y += x·y`.
    pub fn update(&mut self, x: &[f64], y: f64, noise_cov: &SymMatrix) {
        self.z.add_outer(x, 1.0);
        self.z.add_scaled(noise_cov, -1.0);
        for (acc, xi) in self.y.iter_mut().zip(x) {
            *acc += xi * y;
        }
        self.updates += 1;
    }

    /// Estimate used at round `t` (1-based), from the statistics of rounds `< t`.
    pub fn estimate(&self, t: usize) -> Estimate {
        let eigen = eigendecompose(&self.z).expect("Z stays finite for finite inputs");
        let rank = rank_threshold(&eigen, (t as f64).powf(self.alpha));
        let theta = truncated_pinv_apply(&eigen, rank, &self.y).expect("threshold is positive");
        Estimate { eigen, rank, theta }
    }
}

/// Elimination loop that builds the candidate set.
///
/// Repeatedly moves the best remaining arm `c` into the candidate set and
/// eliminates every remaining `i` with `r_i + w(i, c) ≤ r_c`. The first
/// candidate is always the overall argmax (lowest index on ties).
pub fn candidate_set(rewards: &[f64], width: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let k = rewards.len();
    let mut candidate = vec![false; k];
    let mut eliminated = vec![false; k];
    let mut out = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for i in (0..k).filter(|&i| !candidate[i] && !eliminated[i]) {
            if best.is_none_or(|b| rewards[i] > rewards[b]) {
                best = Some(i);
            }
        }
        let Some(c) = best else { break };
        candidate[c] = true;
        out.push(c);
        for i in 0..k {
            if candidate[i] || eliminated[i] {
                continue;
            }
            let w = width(i, c);
            if rewards[i] + w <= rewards[c] {
                debug_assert!(rewards[i] + w <= rewards[c]);
                eliminated[i] = true;
            }
        }
    }
    out
}

/// Candidate set for one round given the current estimate.
pub fn round_candidates(est: &Estimate, contexts: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
    let rewards: Vec<f64> = contexts.iter().map(|x| linalg::dot(x, &est.theta)).collect();
    let d = est.eigen.dim();
    // residual coordinates U_{k+1:d}ᵀ x_i; widths are distances between them
    let residual: Vec<Vec<f64>> = contexts
        .iter()
        .map(|x| est.eigen.project(x)[est.rank..d].to_vec())
        .collect();
    let width = |i: usize, j: usize| {
        residual[i]
            .iter()
            .zip(&residual[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let c = candidate_set(&rewards, width);
    (rewards, c)
}

#[derive(Debug, Clone)]
pub struct NLinRel {
    estimator: NLinRelEstimator,
    theta_hat: Vec<f64>,
    last_candidates: Vec<usize>,
}

impl NLinRel {
    pub fn new(dim: usize, alpha: f64) -> Self {
        Self {
            estimator: NLinRelEstimator::new(dim, alpha),
            theta_hat: vec![0.0; dim],
            last_candidates: Vec::new(),
        }
    }

    pub fn estimator(&self) -> &NLinRelEstimator {
        &self.estimator
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    /// Candidate set computed by the last `select`.
    pub fn last_candidates(&self) -> &[usize] {
        &self.last_candidates
    }
}

impl Policy for NLinRel {
    fn name(&self) -> &'static str {
        "nlinrel"
    }

    fn select(&mut self, t: usize, contexts: &[Vec<f64>], rng: &mut dyn RngCore) -> usize {
        let est = self.estimator.estimate(t);
        let (_, candidates) = round_candidates(&est, contexts);
        self.theta_hat = est.theta;
        let arm = if candidates.len() == 1 {
            candidates[0]
        } else {
            candidates[rng.random_range(0..candidates.len())]
        };
        self.last_candidates = candidates;
        arm
    }

    fn observe(&mut self, _t: usize, _arm: usize, x: &[f64], y: f64, noise_cov: &SymMatrix) {
        self.estimator.update(x, y, noise_cov);
    }

    fn coefficient(&self) -> Option<Vec<f64>> {
        Some(self.theta_hat.clone())
    }
}
