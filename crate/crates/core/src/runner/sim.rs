use crate::env::{instantaneous_regret, relative_regret, Environment};
use crate::error::{Error, Result};
use crate::linalg::cosine_distance;
use crate::policies::{BuildContext, ContextSource, Policy, PolicySpec};
use crate::rng::{label_hash, stream, Domain};

use super::config::{Metric, RunConfig};
use super::RunRecord;

/// Policy for `spec` in the environment of one seed.
pub fn build_policy(spec: &PolicySpec, env: &Environment) -> Result<Box<dyn Policy>> {
    let cfg = env.config();
    spec.build(&BuildContext {
        arms: cfg.arms,
        dim: cfg.dim,
        horizon: cfg.horizon,
        noise_cov: env.noise_covariance().clone(),
        theta_star: Some(env.theta_star().to_vec()),
        theta_bar: Some(env.theta_bar().to_vec()),
        contexts: ContextSource::Distribution(env.feature_sampler().clone()),
        init_rng_seed: cfg.seed,
    })
}

/// Which optional columns to fill.
#[derive(Debug, Clone, Copy)]
pub struct Columns {
    pub rel_regret: bool,
    pub cos_dist: bool,
}

impl Columns {
    pub fn all() -> Self {
        Self {
            rel_regret: true,
            cos_dist: true,
        }
    }

    fn from_config(cfg: &RunConfig) -> Self {
        Self {
            rel_regret: cfg.wants(Metric::RelRegret),
            cos_dist: cfg.wants(Metric::CosDist),
        }
    }
}

/// Runs one policy on one environment for the full horizon.
///
/// `on_round` sees every round with the chosen arm and observed reward,
/// before the policy is updated.
pub fn simulate_policy(
    env: &Environment,
    policy: &mut dyn Policy,
    label: &str,
    columns: Columns,
    mut on_round: impl FnMut(&crate::env::RoundContext, usize, f64),
) -> Result<Vec<RunRecord>> {
    let cfg = env.config();
    let mut rng = stream(cfg.seed, Domain::Policy, label_hash(label), 0);
    let theta_star = env.theta_star();
    let theta_bar = env.theta_bar();
    let noise_cov = env.noise_covariance();
    let mut records = Vec::with_capacity(cfg.horizon);
    let (mut cum, mut rel) = (0.0, 0.0);
    for t in 1..=cfg.horizon {
        let round = env.sample_round(t);
        let arm = policy.select(t, &round.x, &mut rng);
        if arm >= cfg.arms {
            return Err(Error::config(format!("policy {label} chose arm {arm} of {}", cfg.arms)));
        }
        let y = env.reward(&round, arm, &mut env.reward_stream(t, arm));
        on_round(&round, arm, y);
        policy.observe(t, arm, &round.x[arm], y, noise_cov);

        let inst = instantaneous_regret(&round, arm, theta_star);
        cum += inst;
        rel += relative_regret(&round, arm, theta_bar);
        let cos_dist = if columns.cos_dist {
            policy.coefficient().and_then(|c| cosine_distance(&c, theta_star))
        } else {
            None
        };
        records.push(RunRecord {
            t,
            policy: label.to_string(),
            seed: cfg.seed,
            arm,
            reward: y,
            inst_regret: inst,
            cum_regret: cum,
            rel_regret: columns.rel_regret.then_some(rel),
            cos_dist,
        });
    }
    Ok(records)
}

/// All (policy, seed) runs of a config, ordered by policy, seed, then t.
pub fn run_simulation(cfg: &RunConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let columns = Columns::from_config(cfg);
    let envs = cfg
        .seeds
        .iter()
        .map(|&s| Environment::new(cfg.environment.for_seed(s)).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    // build everything first so parameter errors surface before any round runs
    let mut runs = Vec::new();
    for spec in &cfg.policies {
        for env in &envs {
            runs.push((spec.label(), env, build_policy(spec, env)?));
        }
    }
    let mut out = Vec::with_capacity(runs.len() * cfg.environment.horizon);
    for (label, env, mut policy) in runs {
        out.extend(simulate_policy(env, policy.as_mut(), label, columns, |_, _, _| {})?);
    }
    Ok(out)
}
