//! LinUCB with a ridge-initialized design matrix.

use rand::RngCore;

use super::Policy;
use crate::linalg::{argmax, cholesky_solve, dot, SymMatrix};

pub const DEFAULT_UCB_ALPHA: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct LinUcb {
    a: SymMatrix,
    b: Vec<f64>,
    alpha: f64,
    theta_hat: Vec<f64>,
}

impl LinUcb {
    pub fn new(dim: usize, alpha: f64) -> Self {
        Self {
            a: SymMatrix::identity(dim),
            b: vec![0.0; dim],
            alpha,
            theta_hat: vec![0.0; dim],
        }
    }

    pub fn design(&self) -> &SymMatrix {
        &self.a
    }

    /// `θ̂ = A⁻¹b` and the upper confidence score of every context.
    pub fn scores(&self, contexts: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let l = self.a.cholesky().expect("A = I + Σxxᵀ is positive definite");
        let theta = cholesky_solve(&l, &self.b);
        let scores = contexts
            .iter()
            .map(|x| dot(x, &theta) + self.alpha * dot(x, &cholesky_solve(&l, x)).max(0.0).sqrt())
            .collect();
        (theta, scores)
    }
}

impl Policy for LinUcb {
    fn name(&self) -> &'static str {
        "linucb"
    }

    fn select(&mut self, _t: usize, contexts: &[Vec<f64>], _rng: &mut dyn RngCore) -> usize {
        let (theta, scores) = self.scores(contexts);
        self.theta_hat = theta;
        argmax(&scores).unwrap_or(0)
    }

    fn observe(&mut self, _t: usize, _arm: usize, x: &[f64], y: f64, _noise_cov: &SymMatrix) {
        self.a.add_outer(x, 1.0);
        for (acc, xi) in self.b.iter_mut().zip(x) {
            *acc += xi * y;
        }
    }

    fn coefficient(&self) -> Option<Vec<f64>> {
        Some(self.theta_hat.clone())
    }
}
