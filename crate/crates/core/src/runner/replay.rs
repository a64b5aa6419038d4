//! Policy evaluation on logged full-information data.
//!
//! The dataset is a CSV with header `round,arm_index,context_0,…,context_{d−1},reward`
//! and K consecutive rows per round. Every arm's reward is logged, so any
//! choice can be scored against the best reward of its round. Policies only
//! ever see the reward of the arm they chose.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::policies::{BuildContext, ContextSource, Policy, PolicySpec};
use crate::rng::{label_hash, stream, Domain};

use super::RunRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRound {
    pub id: String,
    pub contexts: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayDataset {
    pub arms: usize,
    pub dim: usize,
    pub rounds: Vec<ReplayRound>,
}

fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::data(line, format!("{what}: cannot parse {field:?} as a number")))?;
    if !v.is_finite() {
        return Err(Error::data(line, format!("{what}: {field:?} is not finite")));
    }
    Ok(v)
}

impl ReplayDataset {
    pub fn parse(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::data(1, e.to_string()))?.clone();
        let n = header.len();
        if n < 4 || &header[0] != "round" || &header[1] != "arm_index" || &header[n - 1] != "reward" {
            return Err(Error::data(1, "header must be round,arm_index,context_0,...,reward"));
        }
        let dim = n - 3;
        for j in 0..dim {
            if header[2 + j] != *format!("context_{j}") {
                return Err(Error::data(1, format!("expected column context_{j}, found {:?}", &header[2 + j])));
            }
        }

        let mut rounds: Vec<ReplayRound> = Vec::new();
        let mut arms: Option<usize> = None;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::data(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let id = rec[0].to_string();
            let arm: usize = rec[1]
                .parse()
                .map_err(|_| Error::data(line, format!("arm_index {:?} is not a non-negative integer", &rec[1])))?;
            let context = (0..dim)
                .map(|j| parse_f64(&rec[2 + j], line, &format!("context_{j}")))
                .collect::<Result<Vec<_>>>()?;
            let reward = parse_f64(&rec[n - 1], line, "reward")?;

            let starts_round = rounds.last().is_none_or(|r| r.id != id);
            if starts_round {
                if let Some(prev) = rounds.last() {
                    let k = prev.rewards.len();
                    if *arms.get_or_insert(k) != k {
                        return Err(Error::data(line - 1, format!("round {:?} has {k} arms, expected {}", prev.id, arms.unwrap())));
                    }
                }
                if rounds.iter().any(|r| r.id == id) {
                    return Err(Error::data(line, format!("round {id:?} is not contiguous")));
                }
                rounds.push(ReplayRound {
                    id,
                    contexts: Vec::new(),
                    rewards: Vec::new(),
                });
            }
            let round = rounds.last_mut().expect("pushed above");
            if arm != round.rewards.len() {
                return Err(Error::data(line, format!("expected arm_index {}, found {arm}", round.rewards.len())));
            }
            round.contexts.push(context);
            round.rewards.push(reward);
        }
        let Some(last) = rounds.last() else {
            return Err(Error::data(1, "dataset has no rows"));
        };
        let k = *arms.get_or_insert(last.rewards.len());
        if last.rewards.len() != k {
            return Err(Error::data(0, format!("last round {:?} has {} arms, expected {k}", last.id, last.rewards.len())));
        }
        if k < 2 {
            return Err(Error::data(0, "replay needs at least two arms per round"));
        }
        Ok(Self { arms: k, dim, rounds })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(std::fs::File::open(path)?)
    }

    /// `scale · diag(sample covariance of every logged context)`.
    pub fn noise_covariance(&self, scale: f64) -> SymMatrix {
        let d = self.dim;
        let n = (self.rounds.len() * self.arms) as f64;
        let mut mean = vec![0.0; d];
        for x in self.rounds.iter().flat_map(|r| &r.contexts) {
            mean.iter_mut().zip(x).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; d];
        for x in self.rounds.iter().flat_map(|r| &r.contexts) {
            for j in 0..d {
                var[j] += (x[j] - mean[j]).powi(2);
            }
        }
        let denom = (n - 1.0).max(1.0);
        SymMatrix::from_diagonal(&var.iter().map(|v| scale * v / denom).collect::<Vec<_>>())
    }
}

fn default_noise_scale() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayConfig {
    pub policies: Vec<PolicySpec>,
    pub seeds: Vec<u64>,
    /// Noise covariance handed to policies, as a fraction of the diagonal
    /// sample covariance of the contexts.
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
    /// Explicit noise covariance; overrides `noise_scale`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_covariance: Option<SymMatrix>,
}

impl ReplayConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ReplayConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        super::config::check_policies(&cfg.policies)?;
        if cfg.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if !(cfg.noise_scale >= 0.0 && cfg.noise_scale.is_finite()) {
            return Err(Error::config("noise_scale must be finite and >= 0"));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Replays one policy over the dataset.
pub fn replay_policy(
    data: &ReplayDataset,
    policy: &mut dyn Policy,
    label: &str,
    seed: u64,
    noise_cov: &SymMatrix,
) -> Result<Vec<RunRecord>> {
    let mut rng = stream(seed, Domain::Policy, label_hash(label), 0);
    let mut cum = 0.0;
    let mut out = Vec::with_capacity(data.rounds.len());
    for (i, round) in data.rounds.iter().enumerate() {
        let t = i + 1;
        let arm = policy.select(t, &round.contexts, &mut rng);
        if arm >= data.arms {
            return Err(Error::config(format!("policy {label} chose arm {arm} of {}", data.arms)));
        }
        let y = round.rewards[arm];
        policy.observe(t, arm, &round.contexts[arm], y, noise_cov);
        let best = round.rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let inst = best - y;
        cum += inst;
        out.push(RunRecord {
            t,
            policy: label.to_string(),
            seed,
            arm,
            reward: y,
            inst_regret: inst,
            cum_regret: cum,
            rel_regret: None,
            cos_dist: None,
        });
    }
    Ok(out)
}

pub fn run_replay(data: &ReplayDataset, cfg: &ReplayConfig) -> Result<Vec<RunRecord>> {
    let noise_cov = match &cfg.noise_covariance {
        Some(c) if c.dim() != data.dim => {
            return Err(Error::config(format!("noise covariance is {0}x{0}, data has d = {1}", c.dim(), data.dim)))
        }
        Some(c) => c.clone(),
        None => data.noise_covariance(cfg.noise_scale),
    };
    let mut runs = Vec::new();
    for spec in &cfg.policies {
        for &seed in &cfg.seeds {
            let policy = spec.build(&BuildContext {
                arms: data.arms,
                dim: data.dim,
                horizon: data.rounds.len(),
                noise_cov: noise_cov.clone(),
                theta_star: None,
                theta_bar: None,
                contexts: ContextSource::CurrentContexts,
                init_rng_seed: seed,
            })?;
            runs.push((spec.label(), seed, policy));
        }
    }
    let mut out = Vec::new();
    for (label, seed, mut policy) in runs {
        out.extend(replay_policy(data, policy.as_mut(), label, seed, &noise_cov)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DATA: &str = "round,arm_index,context_0,context_1,reward\n\
                        1,0,1.0,0.0,0.5\n1,1,0.0,1.0,0.2\n\
                        2,0,0.5,0.5,0.1\n2,1,-1.0,0.0,0.9\n";

    #[test]
    fn parses_rounds() {
        let d = ReplayDataset::parse(DATA.as_bytes()).unwrap();
        assert_eq!((d.arms, d.dim, d.rounds.len()), (2, 2, 2));
        assert_eq!(d.rounds[1].contexts[1], vec![-1.0, 0.0]);
        assert_eq!(d.rounds[1].rewards, vec![0.1, 0.9]);
    }

    fn err_line(text: &str) -> usize {
        match ReplayDataset::parse(text.as_bytes()).unwrap_err() {
            Error::Data { line, .. } => line,
            e => panic!("expected data error, got {e}"),
        }
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        assert_eq!(err_line(&DATA.replace("0.5,0.5,0.1", "0.5,abc,0.1")), 4);
        assert_eq!(err_line(&DATA.replace("2,1,-1.0,0.0,0.9", "2,1,-1.0,0.9")), 5);
        assert_eq!(err_line(&DATA.replace("2,1,-1.0", "2,2,-1.0")), 5);
        assert_eq!(err_line(&DATA.replace("context_1", "ctx")), 1);
        assert_eq!(err_line(&DATA.replace("0.2\n", "NaN\n")), 3);
        assert_eq!(err_line("round,arm_index,context_0,reward\n1,0,1.0,2.0\n"), 0);
    }

    #[test]
    fn noise_covariance_is_scaled_sample_variance() {
        let d = ReplayDataset::parse(DATA.as_bytes()).unwrap();
        let c = d.noise_covariance(0.1);
        // column 0: 1, 0, 0.5, −1 → mean 0.125, sample var 0.72917
        let xs = [1.0, 0.0, 0.5, -1.0];
        let m = xs.iter().sum::<f64>() / 4.0;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 3.0;
        assert!((c[(0, 0)] - 0.1 * v).abs() < 1e-15);
        assert_eq!(c[(0, 1)], 0.0);
    }

    #[test]
    fn oracles_are_rejected() {
        let d = ReplayDataset::parse(DATA.as_bytes()).unwrap();
        let cfg = ReplayConfig::from_json(r#"{"policies":[{"name":"oracle_tc"}],"seeds":[1]}"#).unwrap();
        assert_eq!(run_replay(&d, &cfg).unwrap_err().exit_code(), 2);
    }
}
