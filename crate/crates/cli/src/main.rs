use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bandit_lab::gradient::{gradient_norm_table, GradientTableConfig};
use bandit_lab::runner::{output, run_diagnostics, run_replay, run_simulation, Metric, ReplayConfig, ReplayDataset, RunConfig};
use bandit_lab::{Error, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bandit-lab", version, about = "Contextual bandits with noisy features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every policy on every seed and write results.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's output_path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write SVG charts of the logged metrics.
        #[arg(long)]
        charts: bool,
    },
    /// Evaluate policies on a logged full-information dataset.
    Replay {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        charts: bool,
    },
    /// Gradient norms of the per-round regret at θ̄ for several feature laws.
    Gradtable {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral norms of N₁, N₂, N₃ at t = 2^j.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(Error::from)
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, out, charts } => {
            let cfg = RunConfig::from_json(&read_config(&config)?)?;
            let dir = out
                .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
                .ok_or_else(|| Error::config("no output directory: pass --out or set output_path"))?;
            let records = run_simulation(&cfg)?;
            output::write_results_file(&records, &dir)?;
            if cfg.wants(Metric::Diagnostics) {
                output::write_diagnostics(&run_diagnostics(&cfg)?, create(&dir.join("diagnostics.csv"))?)?;
            }
            if charts {
                output::write_charts(&records, &dir)?;
            }
        }
        Command::Replay { data, config, out, charts } => {
            let cfg = ReplayConfig::from_json(&read_config(&config)?)?;
            let dataset = ReplayDataset::load(&data)?;
            let records = run_replay(&dataset, &cfg)?;
            output::write_results_file(&records, &out)?;
            if charts {
                output::write_charts(&records, &out)?;
            }
        }
        Command::Gradtable { config, out } => {
            let cfg: GradientTableConfig =
                serde_json::from_str(&read_config(&config)?).map_err(|e| Error::config(e.to_string()))?;
            let rows = gradient_norm_table(&cfg)?;
            output::write_gradient_table(&rows, create(&out)?)?;
        }
        Command::Diagnose { config, out } => {
            let cfg = RunConfig::from_json(&read_config(&config)?)?;
            output::write_diagnostics(&run_diagnostics(&cfg)?, create(&out)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bandit-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
