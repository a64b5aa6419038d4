use rand::RngCore;

use super::Policy;
use crate::linalg::{argmax, dot, SymMatrix};

/// Plays `argmax_i x_iᵀθ` for a fixed, externally supplied `θ`.
#[derive(Debug, Clone)]
pub struct OracleLinear {
    name: &'static str,
    theta: Vec<f64>,
}

impl OracleLinear {
    /// Oracle-TC, with `θ = θ*`.
    pub fn true_coefficient(theta_star: Vec<f64>) -> Self {
        Self {
            name: "oracle_tc",
            theta: theta_star,
        }
    }

    /// Oracle-CF, with `θ = θ̄`.
    pub fn closed_form(theta_bar: Vec<f64>) -> Self {
        Self {
            name: "oracle_cf",
            theta: theta_bar,
        }
    }
}

impl Policy for OracleLinear {
    fn name(&self) -> &'static str {
        self.name
    }

    fn is_oracle(&self) -> bool {
        true
    }

    fn select(&mut self, _t: usize, contexts: &[Vec<f64>], _rng: &mut dyn RngCore) -> usize {
        let scores: Vec<f64> = contexts.iter().map(|x| dot(x, &self.theta)).collect();
        argmax(&scores).unwrap_or(0)
    }

    fn observe(&mut self, _t: usize, _arm: usize, _x: &[f64], _y: f64, _noise_cov: &SymMatrix) {}

    fn coefficient(&self) -> Option<Vec<f64>> {
        Some(self.theta.clone())
    }
}
