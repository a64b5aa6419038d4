//! Empirical norms of the matrix martingales driving NLinRel's analysis.
//!
//! Alongside a policy run in an identical-noise environment:
//! `N₁ = Σ z_a εᵀ`, `N₂ = Σ (εεᵀ − Σ_noise)`, `N₃ = Σ x_a (y − z_aᵀθ*)`.

use crate::env::{Environment, NoiseMode};
use crate::error::{Error, Result};
use crate::linalg::{dilation, dot, symmetric_spectral_norm, Matrix, SymMatrix};
use crate::policies::PolicySpec;

use super::config::RunConfig;
use super::sim::{build_policy, simulate_policy, Columns};

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub policy: String,
    pub seed: u64,
    pub t: usize,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
}

/// Running sums for `N₁`, `N₂`, `N₃`.
#[derive(Debug, Clone)]
pub struct Martingales {
    n1: Matrix,
    n2: SymMatrix,
    n3: Matrix,
}

fn rect_norm(a: &Matrix) -> f64 {
    symmetric_spectral_norm(&dilation(a)).expect("finite sums")
}

impl Martingales {
    pub fn new(dim: usize) -> Self {
        Self {
            n1: Matrix::zeros(dim, dim),
            n2: SymMatrix::zeros(dim),
            n3: Matrix::zeros(dim, 1),
        }
    }

    pub fn update(&mut self, z: &[f64], eps: &[f64], x: &[f64], y: f64, theta_star: &[f64], noise_cov: &SymMatrix) {
        self.n1.add_outer(z, eps, 1.0);
        self.n2.add_outer(eps, 1.0);
        self.n2.add_scaled(noise_cov, -1.0);
        let resid = y - dot(z, theta_star);
        self.n3.add_outer(x, &[1.0], resid);
    }

    /// Spectral norms `(‖N₁‖, ‖N₂‖, ‖N₃‖)`.
    pub fn norms(&self) -> (f64, f64, f64) {
        let n1 = rect_norm(&self.n1);
        let n2 = symmetric_spectral_norm(&self.n2).expect("finite sums");
        let n3 = rect_norm(&self.n3);
        // sanity: ‖N₁ + N₂‖ ≤ ‖N₁‖ + ‖N₂‖
        let mut sum = self.n1.clone();
        sum.add_scaled(self.n2.as_matrix(), 1.0);
        let joint = rect_norm(&sum);
        assert!(joint <= (n1 + n2) * (1.0 + 1e-9) + 1e-12, "triangle inequality violated");
        (n1, n2, n3)
    }
}

fn is_checkpoint(t: usize) -> bool {
    t.is_power_of_two()
}

/// Runs `spec` in the environment of `seed` and logs the norms at `t = 2^j`.
pub fn diagnose_policy(cfg: &RunConfig, spec: &PolicySpec, seed: u64) -> Result<Vec<DiagnosticsRecord>> {
    if cfg.environment.noise.mode != NoiseMode::Identical {
        return Err(Error::config("diagnostics are defined for identical noise only"));
    }
    let env = Environment::new(cfg.environment.for_seed(seed))?;
    let mut policy = build_policy(spec, &env)?;
    let theta_star = env.theta_star().to_vec();
    let noise_cov = env.noise_covariance().clone();
    let mut mart = Martingales::new(env.config().dim);
    let mut out = Vec::new();
    let label = spec.label();
    simulate_policy(
        &env,
        policy.as_mut(),
        label,
        Columns {
            rel_regret: false,
            cos_dist: false,
        },
        |round, arm, y| {
            mart.update(&round.z[arm], &round.eps[arm], &round.x[arm], y, &theta_star, &noise_cov);
            if is_checkpoint(round.t) {
                let (n1, n2, n3) = mart.norms();
                out.push(DiagnosticsRecord {
                    policy: label.to_string(),
                    seed,
                    t: round.t,
                    n1,
                    n2,
                    n3,
                });
            }
        },
    )?;
    Ok(out)
}

/// Diagnostics for every policy and seed of the config.
pub fn run_diagnostics(cfg: &RunConfig) -> Result<Vec<DiagnosticsRecord>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for spec in &cfg.policies {
        for &seed in &cfg.seeds {
            out.extend(diagnose_policy(cfg, spec, seed)?);
        }
    }
    Ok(out)
}
