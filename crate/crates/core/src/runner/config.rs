use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{sample_theta_star, Environment, EnvironmentConfig, FeatureDistribution, NoiseMode, NoiseModel};
use crate::error::{Error, Result};
use crate::policies::PolicySpec;

fn default_reward_sigma() -> f64 {
    0.1
}

/// Environment section of a run config. `θ*` may be left out, in which
/// case it is drawn per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub arms: usize,
    pub dim: usize,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
    pub features: FeatureDistribution,
    pub noise: NoiseModel,
    #[serde(default = "default_reward_sigma")]
    pub reward_noise_sigma: f64,
}

impl EnvironmentSpec {
    pub fn for_seed(&self, seed: u64) -> EnvironmentConfig {
        EnvironmentConfig {
            arms: self.arms,
            dim: self.dim,
            horizon: self.horizon,
            theta_star: self.theta_star.clone().unwrap_or_else(|| sample_theta_star(self.dim, seed)),
            features: self.features.clone(),
            noise: self.noise.clone(),
            reward_noise_sigma: self.reward_noise_sigma,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    CumRegret,
    RelRegret,
    CosDist,
    Diagnostics,
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::CumRegret, Metric::RelRegret, Metric::CosDist]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub environment: EnvironmentSpec,
    pub policies: Vec<PolicySpec>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    /// Default output directory when the CLI is not given one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

pub(crate) fn check_policies(policies: &[PolicySpec]) -> Result<()> {
    if policies.is_empty() {
        return Err(Error::config("at least one policy is required"));
    }
    let mut seen = HashSet::new();
    for p in policies {
        p.validate()?;
        let label = p.label();
        if label.is_empty() || label.contains([',', '"', '\n', '\r']) {
            return Err(Error::config(format!("invalid policy label {label:?}")));
        }
        if !seen.insert(label.to_string()) {
            return Err(Error::config(format!("duplicate policy label {label:?}; set distinct \"label\" fields")));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn wants(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }

    pub fn validate(&self) -> Result<()> {
        check_policies(&self.policies)?;
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        Environment::new(self.environment.for_seed(self.seeds[0]))?;
        if self.wants(Metric::Diagnostics) && self.environment.noise.mode != NoiseMode::Identical {
            return Err(Error::config("diagnostics require identical noise"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "environment": {
            "arms": 3, "dim": 2, "horizon": 10,
            "features": {"kind": "iid_per_coordinate", "family": {"type": "gaussian", "mean": 0, "std": 1}},
            "noise": {"mode": "identical", "covariance": {"diagonal": [0.1, 0.2]}}
        },
        "policies": [{"name": "nlinrel"}, {"name": "linucb", "ucb_alpha": 0.5}],
        "seeds": [1, 2]
    }"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.environment.reward_noise_sigma, 0.1);
        assert_eq!(cfg.metrics, default_metrics());
        let env = cfg.environment.for_seed(7);
        assert_eq!(env.theta_star, sample_theta_star(2, 7));
        assert_eq!(env.seed, 7);
    }

    #[test]
    fn config_errors() {
        let bad = [
            MINIMAL.replace(r#""seeds": [1, 2]"#, r#""seeds": []"#),
            MINIMAL.replace(r#"{"name": "nlinrel"}, "#, r#"{"name": "linucb"}, "#),
            MINIMAL.replace(r#"[0.1, 0.2]"#, r#"[0.1]"#),
            MINIMAL.replace(r#""nlinrel""#, r#""exp4""#),
            MINIMAL.replace(r#""seeds""#, r#""metrics": ["diagnostics"], "seeds""#).replace("identical", "per_arm"),
            MINIMAL.replace(r#""horizon": 10"#, r#""horizon": 10, "theta_star": [1.0, 1.0]"#),
            "{not json".to_string(),
        ];
        for text in bad {
            let err = RunConfig::from_json(&text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }
}
