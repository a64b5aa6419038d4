//! Synthetic noisy-feature environment.
//!
//! Each round draws hidden features `z_i(t)` for every arm, perturbs them
//! with feature noise to produce the observed `x_i(t) = z_i(t) + ε_i(t)`,
//! and pays `z_aᵀθ* + η` for the chosen arm. In identical-noise mode all
//! arms share a single `ε(t)`, which leaves `argmax_i x_iᵀθ*` equal to
//! `argmax_i z_iᵀθ*`.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, argmax, dot, eigendecompose, LinalgError, Matrix, SymMatrix};
use crate::policies::closed_form::bar_theta;
use crate::rng::{stream, Domain};

/// Default truncation radius, in units of the largest noise standard deviation.
pub const DEFAULT_TRUNCATION_SIGMAS: f64 = 6.0;
/// Reward noise is truncated to `[−4σ, 4σ]`.
pub const REWARD_TRUNCATION_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("invalid environment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn invalid(msg: impl Into<String>) -> EnvError {
    EnvError::Invalid(msg.into())
}

/// Scalar distribution for one feature coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Family {
    Gaussian { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    Laplace { loc: f64, scale: f64 },
    Exponential { rate: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Mixture {
        weight: f64,
        first: Box<Family>,
        second: Box<Family>,
    },
}

impl Family {
    pub fn gaussian(mean: f64, std: f64) -> Self {
        Family::Gaussian { mean, std }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Family::Uniform { low, high }
    }

    pub fn mixture(weight: f64, first: Family, second: Family) -> Self {
        Family::Mixture {
            weight,
            first: Box::new(first),
            second: Box::new(second),
        }
    }

    /// `0.3·Gaussian(10,1) + 0.7·Gaussian(−10,1)`
    pub fn gaussian_mixture() -> Self {
        Self::mixture(0.3, Self::gaussian(10.0, 1.0), Self::gaussian(-10.0, 1.0))
    }

    /// `0.3·Uniform(9,11) + 0.7·Uniform(−11,−9)`
    pub fn uniform_mixture() -> Self {
        Self::mixture(0.3, Self::uniform(9.0, 11.0), Self::uniform(-11.0, -9.0))
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{what} must be finite")))
            }
        };
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{what} must be > 0, got {v}")))
            }
        };
        match self {
            Family::Gaussian { mean, std } => {
                finite(*mean, "gaussian mean")?;
                positive(*std, "gaussian std")
            }
            Family::Uniform { low, high } => {
                finite(*low, "uniform low")?;
                finite(*high, "uniform high")?;
                positive(high - low, "uniform width")
            }
            Family::Laplace { loc, scale } => {
                finite(*loc, "laplace loc")?;
                positive(*scale, "laplace scale")
            }
            Family::Exponential { rate } => positive(*rate, "exponential rate"),
            Family::LogNormal { mu, sigma } => {
                finite(*mu, "lognormal mu")?;
                positive(*sigma, "lognormal sigma")
            }
            Family::Mixture {
                weight,
                first,
                second,
            } => {
                if !(*weight > 0.0 && *weight < 1.0) {
                    return Err(invalid(format!("mixture weight must lie in (0,1), got {weight}")));
                }
                first.validate()?;
                second.validate()
            }
        }
    }

    /// Mean of the raw (uncentered) distribution.
    pub fn raw_mean(&self) -> f64 {
        match self {
            Family::Gaussian { mean, .. } => *mean,
            Family::Uniform { low, high } => 0.5 * (low + high),
            Family::Laplace { loc, .. } => *loc,
            Family::Exponential { rate } => 1.0 / rate,
            Family::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Family::Mixture {
                weight,
                first,
                second,
            } => weight * first.raw_mean() + (1.0 - weight) * second.raw_mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Family::Gaussian { std, .. } => std * std,
            Family::Uniform { low, high } => (high - low).powi(2) / 12.0,
            Family::Laplace { scale, .. } => 2.0 * scale * scale,
            Family::Exponential { rate } => 1.0 / (rate * rate),
            Family::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                (s2.exp() - 1.0) * (2.0 * mu + s2).exp()
            }
            Family::Mixture {
                weight,
                first,
                second,
            } => {
                let m = self.raw_mean();
                let second_moment = |f: &Family| f.variance() + f.raw_mean().powi(2);
                weight * second_moment(first) + (1.0 - weight) * second_moment(second) - m * m
            }
        }
    }

    /// Shift subtracted from raw draws. Gaussians and mixtures are used as
    /// written; the other families are centered on their analytic mean.
    pub fn centering_offset(&self) -> f64 {
        match self {
            Family::Gaussian { .. } | Family::Mixture { .. } => 0.0,
            _ => self.raw_mean(),
        }
    }

    /// Mean of the feature coordinate after centering.
    pub fn feature_mean(&self) -> f64 {
        self.raw_mean() - self.centering_offset()
    }

    fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Family::Gaussian { mean, std } => {
                let g: f64 = StandardNormal.sample(rng);
                mean + std * g
            }
            Family::Uniform { low, high } => rng.random_range(*low..*high),
            Family::Laplace { loc, scale } => {
                // inverse CDF on u ∈ (−1/2, 1/2)
                let u: f64 = rng.random::<f64>() - 0.5;
                loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Family::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            Family::LogNormal { mu, sigma } => {
                LogNormal::new(*mu, *sigma).expect("validated sigma").sample(rng)
            }
            Family::Mixture {
                weight,
                first,
                second,
            } => {
                if rng.random::<f64>() < *weight {
                    first.sample_raw(rng)
                } else {
                    second.sample_raw(rng)
                }
            }
        }
    }

    /// One feature coordinate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_raw(rng) - self.centering_offset()
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Gaussian { mean, std } => write!(f, "Gaussian({},{})", fmt_num(*mean), fmt_num(*std)),
            Family::Uniform { low, high } => write!(f, "Uniform({},{})", fmt_num(*low), fmt_num(*high)),
            Family::Laplace { loc, scale } => write!(f, "Laplace({},{})", fmt_num(*loc), fmt_num(*scale)),
            Family::Exponential { rate } => write!(f, "Exponential({})", fmt_num(*rate)),
            Family::LogNormal { mu, sigma } => write!(f, "LogNormal({},{})", fmt_num(*mu), fmt_num(*sigma)),
            Family::Mixture {
                weight,
                first,
                second,
            } => write!(f, "{}*{} + {}*{}", fmt_num(*weight), first, fmt_num(1.0 - weight), second),
        }
    }
}

/// Distribution of one hidden feature vector `z_i(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureDistribution {
    MultivariateGaussian { covariance: SymMatrix },
    IidPerCoordinate { family: Family },
}

impl FeatureDistribution {
    pub fn standard_gaussian() -> Self {
        FeatureDistribution::IidPerCoordinate {
            family: Family::gaussian(0.0, 1.0),
        }
    }

    pub fn iid(family: Family) -> Self {
        FeatureDistribution::IidPerCoordinate { family }
    }

    pub fn label(&self) -> String {
        match self {
            FeatureDistribution::MultivariateGaussian { .. } => "MultivariateGaussian".to_string(),
            FeatureDistribution::IidPerCoordinate { family } => family.to_string(),
        }
    }
}

/// Draws `N(0, Σ)` vectors through a square-root factor of `Σ`.
///
/// Positive semi-definite covariances (including the zero matrix) are
/// accepted so noise can be switched off.
#[derive(Debug, Clone, PartialEq)]
pub enum GaussianSampler {
    Diagonal(Vec<f64>),
    Dense(Matrix),
}

impl GaussianSampler {
    pub fn new(cov: &SymMatrix) -> Result<Self, EnvError> {
        if cov.is_diagonal() {
            let diag = cov.diagonal();
            if diag.iter().any(|&v| v < 0.0) {
                return Err(invalid("covariance has a negative variance"));
            }
            return Ok(GaussianSampler::Diagonal(diag.iter().map(|v| v.sqrt()).collect()));
        }
        let e = eigendecompose(cov)?;
        let n = cov.dim();
        let scale = cov.max_abs().max(f64::MIN_POSITIVE);
        if e.values().iter().any(|&v| v < -1e-10 * scale) {
            return Err(invalid("covariance is not positive semi-definite"));
        }
        let roots: Vec<f64> = e.values().iter().map(|v| v.max(0.0).sqrt()).collect();
        let factor = Matrix::from_fn(n, n, |i, j| e.vectors()[(i, j)] * roots[j]);
        Ok(GaussianSampler::Dense(factor))
    }

    pub fn dim(&self) -> usize {
        match self {
            GaussianSampler::Diagonal(s) => s.len(),
            GaussianSampler::Dense(m) => m.rows(),
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            GaussianSampler::Diagonal(stds) => {
                for (o, s) in out.iter_mut().zip(stds) {
                    let g: f64 = StandardNormal.sample(rng);
                    *o = s * g;
                }
            }
            GaussianSampler::Dense(factor) => {
                let n = factor.rows();
                let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = dot(factor.row(i), &g);
                }
            }
        }
    }
}

/// Sampler for whole K-arm feature sets, also used by the gradient estimator.
#[derive(Debug, Clone)]
pub struct FeatureSampler {
    dim: usize,
    kind: SamplerKind,
    covariance: SymMatrix,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Gaussian(GaussianSampler),
    Iid(Family),
}

impl FeatureSampler {
    pub fn new(dist: &FeatureDistribution, dim: usize) -> Result<Self, EnvError> {
        match dist {
            FeatureDistribution::MultivariateGaussian { covariance } => {
                if covariance.dim() != dim {
                    return Err(invalid(format!(
                        "feature covariance is {}x{}, expected {dim}x{dim}",
                        covariance.dim(),
                        covariance.dim()
                    )));
                }
                covariance
                    .cholesky()
                    .map_err(|_| invalid("feature covariance must be positive definite"))?;
                Ok(Self {
                    dim,
                    kind: SamplerKind::Gaussian(GaussianSampler::new(covariance)?),
                    covariance: covariance.clone(),
                })
            }
            FeatureDistribution::IidPerCoordinate { family } => {
                family.validate()?;
                Ok(Self {
                    dim,
                    kind: SamplerKind::Iid(family.clone()),
                    covariance: SymMatrix::from_diagonal(&vec![family.variance(); dim]),
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Analytic covariance `Σ_feature`.
    pub fn covariance(&self) -> &SymMatrix {
        &self.covariance
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.kind {
            SamplerKind::Gaussian(g) => g.sample_into(rng, out),
            SamplerKind::Iid(family) => out.iter_mut().for_each(|o| *o = family.sample(rng)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.sample_into(rng, &mut v);
        v
    }

    pub fn sample_arms<R: Rng + ?Sized>(&self, arms: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..arms).map(|_| self.sample(rng)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// One `ε(t)` shared by every arm.
    Identical,
    /// Independent `ε_i(t)` per arm.
    PerArm,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub mode: NoiseMode,
    pub covariance: SymMatrix,
    /// Reject draws with `‖ε‖₂` above this radius. Defaults to
    /// `6·sqrt(λ_max(Σ_noise))` when `truncate` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
    #[serde(default = "default_true")]
    pub truncate: bool,
}

impl NoiseModel {
    pub fn new(mode: NoiseMode, covariance: SymMatrix) -> Self {
        Self {
            mode,
            covariance,
            truncation_radius: None,
            truncate: true,
        }
    }

    /// `diag(0.1, 0.2, …, 1.0)` for d = 10, generalized to `diag(i/d)`.
    pub fn graded(mode: NoiseMode, dim: usize) -> Self {
        let diag: Vec<f64> = (1..=dim).map(|i| i as f64 / dim as f64).collect();
        Self::new(mode, SymMatrix::from_diagonal(&diag))
    }

    pub fn disabled(mode: NoiseMode, dim: usize) -> Self {
        Self::new(mode, SymMatrix::zeros(dim))
    }

    pub fn without_truncation(mut self) -> Self {
        self.truncate = false;
        self
    }

    pub fn effective_radius(&self) -> Result<Option<f64>, EnvError> {
        if !self.truncate {
            return Ok(None);
        }
        if let Some(r) = self.truncation_radius {
            if !(r > 0.0) {
                return Err(invalid(format!("truncation radius must be > 0, got {r}")));
            }
            return Ok(Some(r));
        }
        let top = eigendecompose(&self.covariance)?.values().first().copied().unwrap_or(0.0);
        Ok(Some(DEFAULT_TRUNCATION_SIGMAS * top.max(0.0).sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentConfig {
    pub arms: usize,
    pub dim: usize,
    pub horizon: usize,
    pub theta_star: Vec<f64>,
    pub features: FeatureDistribution,
    pub noise: NoiseModel,
    pub reward_noise_sigma: f64,
    pub seed: u64,
}

impl EnvironmentConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.arms == 0 {
            return Err(invalid("at least one arm is required"));
        }
        if self.dim == 0 {
            return Err(invalid("feature dimension must be >= 1"));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon must be >= 1"));
        }
        if self.theta_star.len() != self.dim {
            return Err(invalid(format!(
                "theta_star has length {}, expected {}",
                self.theta_star.len(),
                self.dim
            )));
        }
        if self.theta_star.iter().any(|v| !v.is_finite()) {
            return Err(invalid("theta_star must be finite"));
        }
        if linalg::norm(&self.theta_star) > 1.0 + 1e-12 {
            return Err(invalid("theta_star must have norm <= 1"));
        }
        if self.noise.covariance.dim() != self.dim {
            return Err(invalid(format!(
                "noise covariance is {}x{}, expected {}x{}",
                self.noise.covariance.dim(),
                self.noise.covariance.dim(),
                self.dim,
                self.dim
            )));
        }
        if !(self.reward_noise_sigma >= 0.0) || !self.reward_noise_sigma.is_finite() {
            return Err(invalid("reward_noise_sigma must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Elements Uniform(−1,1), rescaled onto the unit sphere only when the
/// draw has norm above 1.
pub fn sample_theta_star(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Domain::ThetaStar, 0, 0);
    let mut theta: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = linalg::norm(&theta);
    if n > 1.0 {
        theta.iter_mut().for_each(|v| *v /= n);
    }
    theta
}

/// One round of hidden and observed features.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundContext {
    pub t: usize,
    pub z: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub eps: Vec<Vec<f64>>,
}

impl RoundContext {
    pub fn arms(&self) -> usize {
        self.z.len()
    }
}

/// Immutable environment built from a validated config.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: EnvironmentConfig,
    features: FeatureSampler,
    noise: GaussianSampler,
    radius: Option<f64>,
    theta_bar: Vec<f64>,
}

impl Environment {
    pub fn new(cfg: EnvironmentConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        let features = FeatureSampler::new(&cfg.features, cfg.dim)?;
        let noise = GaussianSampler::new(&cfg.noise.covariance)?;
        let radius = cfg.noise.effective_radius()?;
        // Σ_f is positive definite, so the sum is too; θ* is the noiseless limit
        let theta_bar = bar_theta(features.covariance(), &cfg.noise.covariance, &cfg.theta_star)
            .unwrap_or_else(|_| cfg.theta_star.clone());
        Ok(Self {
            cfg,
            features,
            noise,
            radius,
            theta_bar,
        })
    }

    pub fn config(&self) -> &EnvironmentConfig {
        &self.cfg
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.cfg.theta_star
    }

    /// `(Σ_f + Σ_n)⁻¹ Σ_f θ*` for the analytic feature covariance.
    pub fn theta_bar(&self) -> &[f64] {
        &self.theta_bar
    }

    pub fn feature_sampler(&self) -> &FeatureSampler {
        &self.features
    }

    pub fn feature_covariance(&self) -> &SymMatrix {
        self.features.covariance()
    }

    pub fn noise_covariance(&self) -> &SymMatrix {
        &self.cfg.noise.covariance
    }

    fn draw_noise(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        const MAX_REJECTIONS: usize = 10_000;
        for _ in 0..MAX_REJECTIONS {
            self.noise.sample_into(rng, out);
            match self.radius {
                Some(r) if linalg::norm(out) > r => continue,
                _ => return,
            }
        }
        // pathological radius: project the last draw onto the ball
        if let Some(r) = self.radius {
            let n = linalg::norm(out);
            out.iter_mut().for_each(|v| *v *= r / n);
        }
    }

    /// Deterministic in `(seed, t, arm)`.
    pub fn sample_round(&self, t: usize) -> RoundContext {
        let (k, d, seed) = (self.cfg.arms, self.cfg.dim, self.cfg.seed);
        let z: Vec<Vec<f64>> = (0..k)
            .map(|i| self.features.sample(&mut stream(seed, Domain::Features, t as u64, i as u64)))
            .collect();
        let eps: Vec<Vec<f64>> = match self.cfg.noise.mode {
            NoiseMode::Identical => {
                let mut e = vec![0.0; d];
                self.draw_noise(&mut stream(seed, Domain::Noise, t as u64, 0), &mut e);
                vec![e; k]
            }
            NoiseMode::PerArm => (0..k)
                .map(|i| {
                    let mut e = vec![0.0; d];
                    self.draw_noise(&mut stream(seed, Domain::Noise, t as u64, i as u64), &mut e);
                    e
                })
                .collect(),
        };
        let x = z
            .iter()
            .zip(&eps)
            .map(|(zi, ei)| zi.iter().zip(ei).map(|(a, b)| a + b).collect())
            .collect();
        RoundContext { t, z, x, eps }
    }

    /// Stream that yields the reward noise for pulling `arm` in round `t`.
    pub fn reward_stream(&self, t: usize, arm: usize) -> ChaCha8Rng {
        stream(self.cfg.seed, Domain::Reward, t as u64, arm as u64)
    }

    pub fn expected_reward(&self, round: &RoundContext, arm: usize) -> f64 {
        dot(&round.z[arm], &self.cfg.theta_star)
    }

    /// `z_armᵀθ* + η`, `η ~ N(0, σ²)` truncated to `[−4σ, 4σ]`.
    pub fn reward<R: Rng + ?Sized>(&self, round: &RoundContext, arm: usize, rng: &mut R) -> f64 {
        let mean = self.expected_reward(round, arm);
        let sigma = self.cfg.reward_noise_sigma;
        if sigma == 0.0 {
            return mean;
        }
        loop {
            let g: f64 = StandardNormal.sample(rng);
            if g.abs() <= REWARD_TRUNCATION_SIGMAS {
                return mean + sigma * g;
            }
        }
    }
}

fn scores(features: &[Vec<f64>], theta: &[f64]) -> Vec<f64> {
    features.iter().map(|f| dot(f, theta)).collect()
}

/// `argmax_i z_iᵀθ*`, lowest index on ties.
pub fn oracle_arm(round: &RoundContext, theta_star: &[f64]) -> usize {
    argmax(&scores(&round.z, theta_star)).expect("at least one arm")
}

/// `argmax_i x_iᵀθ̄`, lowest index on ties.
pub fn bar_theta_arm(round: &RoundContext, theta_bar: &[f64]) -> usize {
    argmax(&scores(&round.x, theta_bar)).expect("at least one arm")
}

/// `max_i z_iᵀθ* − z_armᵀθ*`
pub fn instantaneous_regret(round: &RoundContext, arm: usize, theta_star: &[f64]) -> f64 {
    let s = scores(&round.z, theta_star);
    s[oracle_arm(round, theta_star)] - s[arm]
}

/// `(x_{i*} − x_arm)ᵀθ̄` with `i* = argmax_i x_iᵀθ̄`.
pub fn relative_regret(round: &RoundContext, arm: usize, theta_bar: &[f64]) -> f64 {
    let s = scores(&round.x, theta_bar);
    s[bar_theta_arm(round, theta_bar)] - s[arm]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn config(mode: NoiseMode, features: FeatureDistribution) -> EnvironmentConfig {
        EnvironmentConfig {
            arms: 5,
            dim: 4,
            horizon: 100,
            theta_star: sample_theta_star(4, 11),
            features,
            noise: NoiseModel::graded(mode, 4),
            reward_noise_sigma: 0.5,
            seed: 11,
        }
    }

    fn hand_round(z: Vec<Vec<f64>>, x: Vec<Vec<f64>>) -> RoundContext {
        let eps = z
            .iter()
            .zip(&x)
            .map(|(a, b)| b.iter().zip(a).map(|(p, q)| p - q).collect())
            .collect();
        RoundContext { t: 1, z, x, eps }
    }

    #[test]
    fn disabled_noise_observes_truth() {
        let mut cfg = config(NoiseMode::PerArm, FeatureDistribution::standard_gaussian());
        cfg.noise = NoiseModel::disabled(NoiseMode::PerArm, 4);
        let env = Environment::new(cfg).unwrap();
        for t in 1..20 {
            let r = env.sample_round(t);
            assert_eq!(r.x, r.z);
        }
    }

    #[test]
    fn identical_mode_shares_noise() {
        let env = Environment::new(config(NoiseMode::Identical, FeatureDistribution::standard_gaussian())).unwrap();
        for t in 1..50 {
            let r = env.sample_round(t);
            for i in 0..r.arms() {
                assert_eq!(r.eps[i], r.eps[0]);
                for j in 0..4 {
                    assert_eq!(r.x[i][j], r.z[i][j] + r.eps[i][j]);
                }
            }
        }
    }

    #[test]
    fn per_arm_mode_draws_independent_noise() {
        let env = Environment::new(config(NoiseMode::PerArm, FeatureDistribution::standard_gaussian())).unwrap();
        let r = env.sample_round(3);
        assert_ne!(r.eps[0], r.eps[1]);
    }

    #[test]
    fn rounds_are_reproducible() {
        let cfg = config(NoiseMode::PerArm, FeatureDistribution::iid(Family::uniform_mixture()));
        let a = Environment::new(cfg.clone()).unwrap();
        let b = Environment::new(cfg).unwrap();
        assert_eq!(a.sample_round(17), b.sample_round(17));
        assert_eq!(a.sample_round(17), a.sample_round(17));
        assert_ne!(a.sample_round(17), a.sample_round(18));
    }

    #[test]
    fn noiseless_reward_is_the_mean() {
        let mut cfg = config(NoiseMode::PerArm, FeatureDistribution::standard_gaussian());
        cfg.reward_noise_sigma = 0.0;
        let env = Environment::new(cfg).unwrap();
        let r = env.sample_round(2);
        let mut rng = env.reward_stream(2, 1);
        assert_eq!(env.reward(&r, 1, &mut rng), dot(&r.z[1], env.theta_star()));
    }

    #[test]
    fn zero_theta_reward_mean_is_zero() {
        let mut cfg = config(NoiseMode::PerArm, FeatureDistribution::standard_gaussian());
        cfg.theta_star = vec![0.0; 4];
        cfg.reward_noise_sigma = 1.0;
        let env = Environment::new(cfg).unwrap();
        let r = env.sample_round(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mean = (0..n).map(|_| env.reward(&r, 0, &mut rng)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn reward_mean_matches_expectation() {
        let mut cfg = config(NoiseMode::PerArm, FeatureDistribution::standard_gaussian());
        cfg.reward_noise_sigma = 0.5;
        let env = Environment::new(cfg).unwrap();
        let r = env.sample_round(4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| env.reward(&r, 2, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let expected = env.expected_reward(&r, 2);
        assert!((mean - expected).abs() < 4.0 * 0.5 * 10f64.powf(-2.5));
        assert!(draws.iter().all(|y| (y - expected).abs() <= 4.0 * 0.5));
    }

    #[test]
    fn oracle_arm_cases() {
        let theta = [1.0];
        let r = hand_round(vec![vec![1.0], vec![0.5]], vec![vec![1.0], vec![0.5]]);
        assert_eq!(oracle_arm(&r, &theta), 0);
        let tie = hand_round(vec![vec![2.0]; 3], vec![vec![2.0]; 3]);
        assert_eq!(oracle_arm(&tie, &theta), 0);
        assert_eq!(bar_theta_arm(&tie, &theta), 0);
        // x ordering reversed relative to z
        let flipped = hand_round(vec![vec![1.0], vec![0.5]], vec![vec![0.2], vec![0.9]]);
        assert_eq!(bar_theta_arm(&flipped, &theta), 1);
    }

    #[test]
    fn regret_cases() {
        let theta = [1.0];
        let r = hand_round(vec![vec![1.0], vec![0.5]], vec![vec![0.4], vec![1.2]]);
        assert_eq!(instantaneous_regret(&r, 0, &theta), 0.0);
        assert_eq!(instantaneous_regret(&r, 1, &theta), 0.5);
        assert_eq!(relative_regret(&r, 1, &theta), 0.0);
        assert!((relative_regret(&r, 0, &theta) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn regrets_match_brute_force() {
        let env = Environment::new(config(NoiseMode::PerArm, FeatureDistribution::standard_gaussian())).unwrap();
        for t in 1..200 {
            let r = env.sample_round(t);
            let (ts, tb) = (env.theta_star(), env.theta_bar());
            let best_z = r.z.iter().map(|z| dot(z, ts)).fold(f64::NEG_INFINITY, f64::max);
            let best_x = r.x.iter().map(|x| dot(x, tb)).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(dot(&r.z[oracle_arm(&r, ts)], ts), best_z);
            assert_eq!(dot(&r.x[bar_theta_arm(&r, tb)], tb), best_x);
            for arm in 0..r.arms() {
                let ir = instantaneous_regret(&r, arm, ts);
                let rr = relative_regret(&r, arm, tb);
                assert!(ir >= 0.0 && rr >= 0.0);
                assert_eq!(ir, best_z - dot(&r.z[arm], ts));
                assert_eq!(rr, best_x - dot(&r.x[arm], tb));
            }
        }
    }

    #[test]
    fn identical_noise_keeps_argmax() {
        let env = Environment::new(config(NoiseMode::Identical, FeatureDistribution::standard_gaussian())).unwrap();
        let ts = env.theta_star().to_vec();
        for t in 1..=10_000 {
            let r = env.sample_round(t);
            let by_x = argmax(&scores(&r.x, &ts)).unwrap();
            assert_eq!(by_x, oracle_arm(&r, &ts), "round {t}");
        }
    }

    #[test]
    fn gaussian_feature_covariance_matches() {
        let cov = SymMatrix::from_rows(&[
            vec![2.0, 0.6, 0.0],
            vec![0.6, 1.0, -0.3],
            vec![0.0, -0.3, 0.5],
        ])
        .unwrap();
        let sampler = FeatureSampler::new(&FeatureDistribution::MultivariateGaussian { covariance: cov.clone() }, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut acc = SymMatrix::zeros(3);
        for _ in 0..n {
            acc.add_outer(&sampler.sample(&mut rng), 1.0 / n as f64);
        }
        for i in 0..3 {
            for j in 0..3 {
                let want = cov[(i, j)];
                let got = acc[(i, j)];
                // 5% relative, with an absolute floor for the structural zero
                assert!((got - want).abs() <= 0.05 * want.abs().max(0.2), "({i},{j}) {got} vs {want}");
            }
        }
    }

    #[test]
    fn family_moments() {
        let cases = [
            (Family::gaussian(0.0, 1.0), 0.0, 1.0),
            (Family::uniform(-1.0, 1.0), 0.0, 1.0 / 3.0),
            (Family::Laplace { loc: 0.0, scale: 1.0 }, 0.0, 2.0),
            (Family::Exponential { rate: 1.0 }, 0.0, 1.0),
            (Family::LogNormal { mu: 0.0, sigma: 1.0 }, 0.0, (1f64.exp() - 1.0) * 1f64.exp()),
            (Family::uniform_mixture(), -4.0, 100.0 + 1.0 / 3.0 - 16.0),
            (Family::gaussian_mixture(), -4.0, 101.0 - 16.0),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 400_000;
        for (family, mean, var) in cases {
            assert!((family.feature_mean() - mean).abs() < 1e-12, "{family}");
            assert!((family.variance() - var).abs() < 1e-12, "{family}");
            let draws: Vec<f64> = (0..n).map(|_| family.sample(&mut rng)).collect();
            let m = draws.iter().sum::<f64>() / n as f64;
            let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / n as f64;
            let se = (var / n as f64).sqrt();
            assert!((m - mean).abs() < 5.0 * se, "{family} mean {m}");
            assert!((v - var).abs() < 0.05 * var, "{family} var {v}");
        }
    }

    #[test]
    fn theta_star_has_bounded_norm() {
        for seed in 0..50 {
            let t = sample_theta_star(10, seed);
            assert!(linalg::norm(&t) <= 1.0 + 1e-12);
        }
        // small dimensions usually stay inside the ball untouched
        assert!(sample_theta_star(1, 3)[0].abs() < 1.0);
    }

    #[test]
    fn truncation_bounds_noise() {
        let mut cfg = config(NoiseMode::PerArm, FeatureDistribution::standard_gaussian());
        cfg.noise.truncation_radius = Some(0.8);
        let env = Environment::new(cfg).unwrap();
        for t in 1..200 {
            for e in env.sample_round(t).eps {
                assert!(linalg::norm(&e) <= 0.8);
            }
        }
        let default = NoiseModel::graded(NoiseMode::PerArm, 10).effective_radius().unwrap().unwrap();
        assert!((default - 6.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = config(NoiseMode::PerArm, FeatureDistribution::standard_gaussian());
        let mut c = base.clone();
        c.theta_star = vec![1.0, 1.0, 0.0, 0.0];
        assert!(Environment::new(c).is_err());
        let mut c = base.clone();
        c.theta_star.push(0.0);
        assert!(Environment::new(c).is_err());
        let mut c = base.clone();
        c.features = FeatureDistribution::iid(Family::mixture(1.5, Family::gaussian(0.0, 1.0), Family::gaussian(1.0, 1.0)));
        assert!(Environment::new(c).is_err());
        let mut c = base;
        c.noise = NoiseModel::graded(NoiseMode::PerArm, 3);
        assert!(Environment::new(c).is_err());
    }
}
