use rand::RngCore;

use super::{uniform_arm, Policy};
use crate::linalg::SymMatrix;

#[derive(Debug, Clone)]
pub struct UniformRandom {
    arms: usize,
}

impl UniformRandom {
    pub fn new(arms: usize) -> Self {
        Self { arms }
    }
}

impl Policy for UniformRandom {
    fn name(&self) -> &'static str {
        "uniform_random"
    }

    fn select(&mut self, _t: usize, contexts: &[Vec<f64>], rng: &mut dyn RngCore) -> usize {
        uniform_arm(self.arms.min(contexts.len()).max(1), rng)
    }

    fn observe(&mut self, _t: usize, _arm: usize, _x: &[f64], _y: f64, _noise_cov: &SymMatrix) {}
}
