//! Experiment orchestration: configs, simulation and replay loops,
//! diagnostics and output files.

pub mod config;
pub mod diagnostics;
pub mod output;
pub mod replay;
pub mod sim;

pub use config::{EnvironmentSpec, Metric, RunConfig};
pub use diagnostics::{run_diagnostics, DiagnosticsRecord};
pub use replay::{replay_policy, run_replay, ReplayConfig, ReplayDataset};
pub use sim::{run_simulation, simulate_policy};

/// One logged round of one (policy, seed) run.
///
/// `rel_regret` is the cumulative relative regret against `argmax x_iᵀθ̄`;
/// it and `cos_dist` are `None` where undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub t: usize,
    pub policy: String,
    pub seed: u64,
    pub arm: usize,
    pub reward: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub rel_regret: Option<f64>,
    pub cos_dist: Option<f64>,
}
