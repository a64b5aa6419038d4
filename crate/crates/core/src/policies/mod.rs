//! Decision policies.

pub mod closed_form;
pub mod greedy;
pub mod linucb;
pub mod nlinrel;
pub mod oracle;
pub mod random;
pub mod universal;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::env::FeatureSampler;
use crate::error::{Error, Result};
use crate::gradient::GradientConfig;
use crate::linalg::SymMatrix;

pub use greedy::{exploration_length, SimpleGreedy};
pub use linucb::LinUcb;
pub use nlinrel::NLinRel;
pub use oracle::OracleLinear;
pub use random::UniformRandom;
pub use universal::Universal;

/// A bandit policy driven one round at a time.
///
/// `select` sees only observed contexts. Policies flagged by `is_oracle`
/// were built with hidden quantities such as `θ*`.
pub trait Policy {
    fn name(&self) -> &'static str;

    fn is_oracle(&self) -> bool {
        false
    }

    /// Arm to play at round `t` (1-based).
    fn select(&mut self, t: usize, contexts: &[Vec<f64>], rng: &mut dyn RngCore) -> usize;

    fn observe(&mut self, t: usize, arm: usize, x: &[f64], y: f64, noise_cov: &SymMatrix);

    /// Current coefficient vector, if the policy keeps one.
    fn coefficient(&self) -> Option<Vec<f64>> {
        None
    }
}

pub(crate) fn uniform_arm(arms: usize, rng: &mut dyn RngCore) -> usize {
    rng.random_range(0..arms)
}

/// Where Universal-NLinRel draws its hidden-feature samples from.
#[derive(Debug, Clone)]
pub enum ContextSource {
    /// Fresh K-arm draws from the known feature law.
    Distribution(FeatureSampler),
    /// The current round's observed contexts.
    CurrentContexts,
}

fn default_alpha() -> f64 {
    nlinrel::DEFAULT_ALPHA_EXPONENT
}

fn default_step() -> f64 {
    universal::DEFAULT_STEP_SIZE
}

fn default_ucb() -> f64 {
    universal::DEFAULT_UCB_COEFF
}

fn default_mc() -> usize {
    universal::DEFAULT_MC_SAMPLES
}

fn default_fd() -> f64 {
    GradientConfig::default().fd_step
}

fn default_linucb_alpha() -> f64 {
    linucb::DEFAULT_UCB_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PolicyKind {
    Nlinrel {
        #[serde(default = "default_alpha")]
        alpha_exponent: f64,
    },
    SimpleGreedy {
        /// Defaults to `⌊T^{2/3}⌋`.
        #[serde(default)]
        tau: Option<usize>,
    },
    UniversalNlinrel {
        #[serde(default = "default_alpha")]
        alpha_exponent: f64,
        #[serde(default = "default_step")]
        step_size: f64,
        #[serde(default = "default_ucb")]
        ucb_coeff: f64,
        #[serde(default = "default_mc")]
        mc_samples: usize,
        #[serde(default = "default_fd")]
        fd_step: f64,
    },
    Linucb {
        #[serde(default = "default_linucb_alpha")]
        ucb_alpha: f64,
    },
    OracleTc,
    OracleCf,
    OracleGd {
        #[serde(default = "default_step")]
        step_size: f64,
        #[serde(default = "default_mc")]
        mc_samples: usize,
        #[serde(default = "default_fd")]
        fd_step: f64,
    },
    UniformRandom,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Nlinrel { .. } => "nlinrel",
            PolicyKind::SimpleGreedy { .. } => "simple_greedy",
            PolicyKind::UniversalNlinrel { .. } => "universal_nlinrel",
            PolicyKind::Linucb { .. } => "linucb",
            PolicyKind::OracleTc => "oracle_tc",
            PolicyKind::OracleCf => "oracle_cf",
            PolicyKind::OracleGd { .. } => "oracle_gd",
            PolicyKind::UniformRandom => "uniform_random",
        }
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self, PolicyKind::OracleTc | PolicyKind::OracleCf | PolicyKind::OracleGd { .. })
    }
}

/// A policy entry of a run config: the algorithm plus an optional label
/// distinguishing several entries of the same algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    #[serde(flatten)]
    pub kind: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl From<PolicyKind> for PolicySpec {
    fn from(kind: PolicyKind) -> Self {
        Self { kind, label: None }
    }
}

/// Everything a policy may be built from.
#[derive(Debug, Clone)]
pub struct BuildContext {
    pub arms: usize,
    pub dim: usize,
    pub horizon: usize,
    pub noise_cov: SymMatrix,
    /// Hidden coefficient; only available in simulation.
    pub theta_star: Option<Vec<f64>>,
    pub theta_bar: Option<Vec<f64>>,
    pub contexts: ContextSource,
    /// Stream for one-off initial draws (Universal-NLinRel's starting θ).
    pub init_rng_seed: u64,
}

impl PolicySpec {
    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.name())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::config(format!("policy {}: {what}", self.label())));
        match &self.kind {
            PolicyKind::Nlinrel { alpha_exponent } => {
                if !(alpha_exponent.is_finite() && *alpha_exponent > 0.0) {
                    return bad("alpha_exponent must be > 0");
                }
            }
            PolicyKind::UniversalNlinrel {
                alpha_exponent,
                step_size,
                ucb_coeff,
                mc_samples,
                fd_step,
            } => {
                if !(alpha_exponent.is_finite() && *alpha_exponent > 0.0) {
                    return bad("alpha_exponent must be > 0");
                }
                if !(step_size.is_finite() && *step_size >= 0.0) || !(ucb_coeff.is_finite() && *ucb_coeff >= 0.0) {
                    return bad("step_size and ucb_coeff must be >= 0");
                }
                if *mc_samples == 0 || !(*fd_step > 0.0) {
                    return bad("mc_samples must be >= 1 and fd_step > 0");
                }
            }
            PolicyKind::OracleGd {
                step_size,
                mc_samples,
                fd_step,
            } => {
                if !(step_size.is_finite() && *step_size >= 0.0) {
                    return bad("step_size must be >= 0");
                }
                if *mc_samples == 0 || !(*fd_step > 0.0) {
                    return bad("mc_samples must be >= 1 and fd_step > 0");
                }
            }
            PolicyKind::Linucb { ucb_alpha } => {
                if !(ucb_alpha.is_finite() && *ucb_alpha >= 0.0) {
                    return bad("ucb_alpha must be >= 0");
                }
            }
            PolicyKind::SimpleGreedy { .. } | PolicyKind::OracleTc | PolicyKind::OracleCf | PolicyKind::UniformRandom => {}
        }
        Ok(())
    }

    pub fn build(&self, ctx: &BuildContext) -> Result<Box<dyn Policy>> {
        self.validate()?;
        let hidden = |v: &Option<Vec<f64>>| {
            v.clone()
                .ok_or_else(|| Error::config(format!("policy {} needs θ*, which replay data does not provide", self.label())))
        };
        let gradient = |mc_samples: usize, fd_step: f64| GradientConfig {
            mc_noise_samples: mc_samples,
            fd_step,
            feature_samples: 1,
            crn: true,
        };
        let mut init_rng = crate::rng::stream(
            ctx.init_rng_seed,
            crate::rng::Domain::Policy,
            crate::rng::label_hash(self.label()),
            1,
        );
        Ok(match &self.kind {
            PolicyKind::Nlinrel { alpha_exponent } => Box::new(NLinRel::new(ctx.dim, *alpha_exponent)),
            PolicyKind::SimpleGreedy { tau } => Box::new(match tau {
                Some(tau) => SimpleGreedy::with_tau(ctx.dim, ctx.arms, *tau),
                None => SimpleGreedy::new(ctx.dim, ctx.arms, ctx.horizon),
            }),
            PolicyKind::UniversalNlinrel {
                alpha_exponent,
                step_size,
                ucb_coeff,
                mc_samples,
                fd_step,
            } => Box::new(Universal::new(
                ctx.dim,
                *alpha_exponent,
                *step_size,
                *ucb_coeff,
                &ctx.noise_cov,
                gradient(*mc_samples, *fd_step),
                ctx.contexts.clone(),
                &mut init_rng,
            )?),
            PolicyKind::OracleGd {
                step_size,
                mc_samples,
                fd_step,
            } => Box::new(Universal::oracle(
                hidden(&ctx.theta_star)?,
                *step_size,
                &ctx.noise_cov,
                gradient(*mc_samples, *fd_step),
                ctx.contexts.clone(),
                &mut init_rng,
            )?),
            PolicyKind::Linucb { ucb_alpha } => Box::new(LinUcb::new(ctx.dim, *ucb_alpha)),
            PolicyKind::OracleTc => Box::new(OracleLinear::true_coefficient(hidden(&ctx.theta_star)?)),
            PolicyKind::OracleCf => Box::new(OracleLinear::closed_form(hidden(&ctx.theta_bar)?)),
            PolicyKind::UniformRandom => Box::new(UniformRandom::new(ctx.arms)),
        })
    }
}
