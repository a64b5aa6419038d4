//! Monte-Carlo per-round regret and its gradient in the decision vector.
//!
//! For hidden features `z` (K arms) and a decision vector `θ`, the
//! per-round regret is `f(θ) = E_ε[ max_i z_iᵀθ* − z_{a_θ}ᵀθ* ]` with
//! `a_θ = argmax_i (z_i + ε_i)ᵀθ` and independent `ε_i ~ N(0, Σ_noise)`.
//! `f` is piecewise constant in each noise sample, so the gradient is taken
//! by central finite differences over a shared set of noise draws.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EnvError, FeatureDistribution, FeatureSampler, GaussianSampler};
use crate::linalg::{argmax, dot, norm, SymMatrix};
use crate::policies::closed_form::bar_theta;
use crate::rng::{label_hash, stream, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradientConfig {
    /// Noise draws per objective evaluation.
    pub mc_noise_samples: usize,
    /// Finite-difference step, relative to `‖θ‖`.
    pub fd_step: f64,
    /// Feature sets averaged by [`averaged_gradient`].
    pub feature_samples: usize,
    /// Reuse the same noise draws for every perturbation.
    pub crn: bool,
}

impl Default for GradientConfig {
    fn default() -> Self {
        Self {
            mc_noise_samples: 1000,
            fd_step: 1e-2,
            feature_samples: 1,
            crn: true,
        }
    }
}

impl GradientConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.mc_noise_samples == 0 || self.feature_samples == 0 {
            return Err(EnvError::Invalid("gradient sample counts must be >= 1".into()));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(EnvError::Invalid(format!("fd_step must be > 0, got {}", self.fd_step)));
        }
        Ok(())
    }
}

/// Regret objective with a fixed noise law.
#[derive(Debug, Clone)]
pub struct RegretObjective {
    noise: GaussianSampler,
    cfg: GradientConfig,
}

impl RegretObjective {
    pub fn new(noise_cov: &SymMatrix, cfg: GradientConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        Ok(Self {
            noise: GaussianSampler::new(noise_cov)?,
            cfg,
        })
    }

    pub fn config(&self) -> &GradientConfig {
        &self.cfg
    }

    /// Fills `out` (K·d, row per arm) with `z_i + ε_i`.
    fn perturb<R: Rng + ?Sized>(&self, z: &[Vec<f64>], rng: &mut R, out: &mut [f64]) {
        let d = self.noise.dim();
        for (i, zi) in z.iter().enumerate() {
            let row = &mut out[i * d..(i + 1) * d];
            self.noise.sample_into(rng, row);
            for (o, v) in row.iter_mut().zip(zi) {
                *o += v;
            }
        }
    }

    fn noisy_argmax(xt: &[f64], d: usize, theta: &[f64], scores: &mut [f64]) -> usize {
        for (i, s) in scores.iter_mut().enumerate() {
            *s = dot(&xt[i * d..(i + 1) * d], theta);
        }
        argmax(scores).unwrap_or(0)
    }

    fn rewards(z: &[Vec<f64>], theta_star: &[f64]) -> (Vec<f64>, f64) {
        let r: Vec<f64> = z.iter().map(|zi| dot(zi, theta_star)).collect();
        let best = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (r, best)
    }

    /// Monte-Carlo estimate of `f(θ)` for one feature set.
    pub fn expected_regret<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        z: &[Vec<f64>],
        theta_star: &[f64],
        rng: &mut R,
    ) -> f64 {
        let k = z.len();
        if k <= 1 {
            return 0.0;
        }
        let d = theta.len();
        let (r, best) = Self::rewards(z, theta_star);
        let mut xt = vec![0.0; k * d];
        let mut scores = vec![0.0; k];
        let mut acc = 0.0;
        for _ in 0..self.cfg.mc_noise_samples {
            self.perturb(z, rng, &mut xt);
            acc += best - r[Self::noisy_argmax(&xt, d, theta, &mut scores)];
        }
        acc / self.cfg.mc_noise_samples as f64
    }

    fn step(&self, theta: &[f64]) -> f64 {
        let n = norm(theta);
        if n > 0.0 {
            self.cfg.fd_step * n
        } else {
            self.cfg.fd_step
        }
    }

    /// Central finite-difference gradient of `f` at `θ`.
    pub fn gradient<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        z: &[Vec<f64>],
        theta_star: &[f64],
        rng: &mut R,
    ) -> Vec<f64> {
        let d = theta.len();
        let k = z.len();
        let mut g = vec![0.0; d];
        if k <= 1 {
            return g;
        }
        let h = self.step(theta);
        let m = self.cfg.mc_noise_samples;
        let (r, _) = Self::rewards(z, theta_star);
        let mut xt = vec![0.0; k * d];
        let mut scores = vec![0.0; k];

        if self.cfg.crn {
            // f(θ+he_j) − f(θ−he_j) per sample is r[a₋] − r[a₊], and the
            // perturbed scores are the base scores shifted by ±h·x̃_ij.
            let mut base = vec![0.0; k];
            for _ in 0..m {
                self.perturb(z, rng, &mut xt);
                for (i, b) in base.iter_mut().enumerate() {
                    *b = dot(&xt[i * d..(i + 1) * d], theta);
                }
                for (j, gj) in g.iter_mut().enumerate() {
                    for (i, s) in scores.iter_mut().enumerate() {
                        *s = base[i] + h * xt[i * d + j];
                    }
                    let plus = argmax(&scores).unwrap_or(0);
                    for (i, s) in scores.iter_mut().enumerate() {
                        *s = base[i] - h * xt[i * d + j];
                    }
                    let minus = argmax(&scores).unwrap_or(0);
                    *gj += r[minus] - r[plus];
                }
            }
        } else {
            let mut probe = theta.to_vec();
            for (j, gj) in g.iter_mut().enumerate() {
                for (sign, weight) in [(1.0, -1.0), (-1.0, 1.0)] {
                    probe[j] = theta[j] + sign * h;
                    for _ in 0..m {
                        self.perturb(z, rng, &mut xt);
                        *gj += weight * r[Self::noisy_argmax(&xt, d, &probe, &mut scores)];
                    }
                }
                probe[j] = theta[j];
            }
        }
        let scale = 1.0 / (m as f64 * 2.0 * h);
        g.iter_mut().for_each(|v| *v *= scale);
        g
    }

    /// Gradient averaged over `feature_samples` independent K-arm feature sets.
    pub fn averaged_gradient<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        theta_star: &[f64],
        features: &FeatureSampler,
        arms: usize,
        rng: &mut R,
    ) -> Vec<f64> {
        let n = self.cfg.feature_samples;
        let mut acc = vec![0.0; theta.len()];
        for _ in 0..n {
            let z = features.sample_arms(arms, rng);
            for (a, v) in acc.iter_mut().zip(self.gradient(theta, &z, theta_star, rng)) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|v| *v /= n as f64);
        acc
    }
}

/// Monte-Carlo estimate of the per-round expected regret.
pub fn per_round_expected_regret<R: Rng + ?Sized>(
    theta: &[f64],
    z: &[Vec<f64>],
    theta_star: &[f64],
    noise_cov: &SymMatrix,
    cfg: &GradientConfig,
    rng: &mut R,
) -> Result<f64, EnvError> {
    Ok(RegretObjective::new(noise_cov, cfg.clone())?.expected_regret(theta, z, theta_star, rng))
}

pub fn regret_gradient<R: Rng + ?Sized>(
    theta: &[f64],
    z: &[Vec<f64>],
    theta_star: &[f64],
    noise_cov: &SymMatrix,
    cfg: &GradientConfig,
    rng: &mut R,
) -> Result<Vec<f64>, EnvError> {
    Ok(RegretObjective::new(noise_cov, cfg.clone())?.gradient(theta, z, theta_star, rng))
}

pub fn averaged_gradient<R: Rng + ?Sized>(
    theta: &[f64],
    theta_star: &[f64],
    noise_cov: &SymMatrix,
    features: &FeatureSampler,
    arms: usize,
    cfg: &GradientConfig,
    rng: &mut R,
) -> Result<Vec<f64>, EnvError> {
    Ok(RegretObjective::new(noise_cov, cfg.clone())?.averaged_gradient(theta, theta_star, features, arms, rng))
}

fn default_table_distributions() -> Vec<FeatureDistribution> {
    use crate::env::Family;
    vec![
        FeatureDistribution::iid(Family::gaussian(0.0, 1.0)),
        FeatureDistribution::iid(Family::uniform(-1.0, 1.0)),
        FeatureDistribution::iid(Family::Laplace { loc: 0.0, scale: 1.0 }),
        FeatureDistribution::iid(Family::Exponential { rate: 1.0 }),
        FeatureDistribution::iid(Family::LogNormal { mu: 0.0, sigma: 1.0 }),
        FeatureDistribution::iid(Family::gaussian_mixture()),
        FeatureDistribution::iid(Family::uniform_mixture()),
    ]
}

fn default_table_arms() -> usize {
    5
}

fn default_table_dim() -> usize {
    10
}

fn default_table_gradient() -> GradientConfig {
    GradientConfig {
        mc_noise_samples: 200,
        fd_step: 5e-2,
        feature_samples: 10_000,
        ..GradientConfig::default()
    }
}

/// Settings for the gradient-norm table at `θ = θ̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientTableConfig {
    #[serde(default = "default_table_arms")]
    pub arms: usize,
    #[serde(default = "default_table_dim")]
    pub dim: usize,
    /// Seed for `θ*`; elements Uniform(−1, 1), rescaled into the unit ball.
    #[serde(default)]
    pub theta_seed: u64,
    /// Seed for feature and noise draws.
    #[serde(default)]
    pub seed: u64,
    /// Defaults to `diag(1/d, 2/d, …, 1)`.
    #[serde(default)]
    pub noise_covariance: Option<SymMatrix>,
    #[serde(default = "default_table_distributions")]
    pub distributions: Vec<FeatureDistribution>,
    #[serde(default = "default_table_gradient")]
    pub gradient: GradientConfig,
}

impl Default for GradientTableConfig {
    fn default() -> Self {
        Self {
            arms: default_table_arms(),
            dim: default_table_dim(),
            theta_seed: 0,
            seed: 0,
            noise_covariance: None,
            distributions: default_table_distributions(),
            gradient: default_table_gradient(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientTableRow {
    pub distribution: String,
    pub l2_norm: f64,
}

/// `‖averaged_gradient(θ̄)‖₂` for each distribution, with `θ̄` taken from
/// the analytic feature covariance.
pub fn gradient_norm_table(cfg: &GradientTableConfig) -> Result<Vec<GradientTableRow>, EnvError> {
    if cfg.arms == 0 || cfg.dim == 0 {
        return Err(EnvError::Invalid("arms and dim must be >= 1".into()));
    }
    let noise_cov = match &cfg.noise_covariance {
        Some(c) if c.dim() != cfg.dim => {
            return Err(EnvError::Invalid(format!(
                "noise covariance has dim {}, expected {}",
                c.dim(),
                cfg.dim
            )))
        }
        Some(c) => c.clone(),
        None => crate::env::NoiseModel::graded(crate::env::NoiseMode::PerArm, cfg.dim).covariance,
    };
    let objective = RegretObjective::new(&noise_cov, cfg.gradient.clone())?;
    let theta_star = crate::env::sample_theta_star(cfg.dim, cfg.theta_seed);
    cfg.distributions
        .iter()
        .map(|dist| {
            let sampler = FeatureSampler::new(dist, cfg.dim)?;
            let theta_bar = bar_theta(sampler.covariance(), &noise_cov, &theta_star)?;
            let label = dist.label();
            let mut rng = stream(cfg.seed, Domain::Gradient, label_hash(&label), 0);
            let g = objective.averaged_gradient(&theta_bar, &theta_star, &sampler, cfg.arms, &mut rng);
            Ok(GradientTableRow {
                distribution: label,
                l2_norm: norm(&g),
            })
        })
        .collect()
}
