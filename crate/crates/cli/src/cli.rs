use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "magfold", version, about = "Bayesian folded-normal models for magnitude outcomes with informative dropout")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model to a long-format CSV dataset.
    Fit(FitArgs),
    /// Simulate a cohort and write it with its ground truth.
    Simulate(SimulateArgs),
    /// Run, resume or merge a Monte Carlo simulation study.
    Study(StudyArgs),
}

/// Flags shared by commands that run the sampler.
#[derive(Debug, Clone, Default, Args)]
pub struct McmcArgs {
    /// Number of chains.
    #[arg(long)]
    pub chains: Option<usize>,
    /// Burn-in (adaptation) iterations per chain.
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Retained iterations per chain.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset with columns subject_id, exposure, time, z[, dropout_cause].
    pub data: PathBuf,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model: A (linear), B (folded), C (joint, linear hazards), D (joint, flexible hazards).
    #[arg(long)]
    pub model: Option<String>,
    /// Hazard time function: linear, flexible or grouped:N.
    #[arg(long)]
    pub temporal: Option<String>,
    /// Sampler seed; chain seeds are derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of measurement times when it exceeds the largest observed time.
    #[arg(long)]
    pub n_times: Option<usize>,
    /// Discard time 0 rows and renumber the remaining times from 0.
    #[arg(long)]
    pub drop_baseline: bool,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML scenario configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Simulation seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Shard `index` of `count`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shard {
    pub index: usize,
    pub count: usize,
}

impl FromStr for Shard {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (i, n) = s.split_once('/').ok_or("expected i/n")?;
        let index: usize = i.trim().parse().map_err(|_| format!("bad shard index `{i}`"))?;
        let count: usize = n.trim().parse().map_err(|_| format!("bad shard count `{n}`"))?;
        if count == 0 || index == 0 || index > count {
            return Err(format!("shard {index}/{count} is out of range (1 <= i <= n)"));
        }
        Ok(Self { index, count })
    }
}

impl Shard {
    pub fn owns(&self, position: usize) -> bool {
        position % self.count == self.index - 1
    }
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// TOML study configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replicates per scenario.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Run only every n-th task, starting at the i-th.
    #[arg(long)]
    pub shard: Option<Shard>,
    /// Keep runs already present in the runs file and do the rest.
    #[arg(long)]
    pub resume: bool,
    /// Aggregate existing runs files instead of running anything.
    #[arg(long, num_args = 1.., value_name = "RUNS_CSV")]
    pub merge: Vec<PathBuf>,
    /// Hazard time function of flexible joint models: flexible or grouped:N.
    #[arg(long)]
    pub temporal: Option<String>,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
