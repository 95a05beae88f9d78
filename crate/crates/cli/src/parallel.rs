//! Chain- and run-level parallelism on a dedicated rayon pool.
//!
//! Work items carry their own derived seeds, so results do not depend on the
//! number of workers or on completion order.

use std::sync::Mutex;

use rayon::prelude::*;

use magfold_core::data::LongitudinalDataset;
use magfold_core::model::ModelSpec;
use magfold_core::sampler::{run_chain, ChainOutput, McmcConfig};
use magfold_core::simulation::{run_replicate, ReplicateResult, ScenarioConfig, StudyModel};

use crate::error::{AppError, AppResult};

pub fn pool(workers: Option<usize>) -> AppResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(AppError::Config("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| AppError::Config(format!("cannot start worker pool: {e}")))
}

/// All chains of one fit, in chain order.
pub fn fit_chains(
    pool: &rayon::ThreadPool,
    data: &LongitudinalDataset,
    spec: &ModelSpec,
    cfg: &McmcConfig,
) -> AppResult<Vec<ChainOutput>> {
    cfg.validate()?;
    let results: Vec<_> = pool.install(|| {
        (0..cfg.n_chains)
            .into_par_iter()
            .map(|c| run_chain(data, spec, cfg, c))
            .collect()
    });
    results.into_iter().map(|r| r.map_err(AppError::from)).collect()
}

/// One pending study run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunTask {
    pub scenario: usize,
    pub run_index: usize,
}

/// Runs `tasks`, handing each finished run to `sink` under a lock. The
/// returned results are in task order.
pub fn run_tasks<F>(
    pool: &rayon::ThreadPool,
    scenarios: &[ScenarioConfig],
    models: &[StudyModel],
    mcmc: &McmcConfig,
    master_seed: u64,
    tasks: &[RunTask],
    sink: F,
) -> AppResult<Vec<(RunTask, ReplicateResult)>>
where
    F: FnMut(&ScenarioConfig, &ReplicateResult) -> AppResult<()> + Send,
{
    let sink = Mutex::new(sink);
    let results: Vec<AppResult<(RunTask, ReplicateResult)>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&task| {
                let sc = &scenarios[task.scenario];
                let run = run_replicate(sc, models, mcmc, master_seed, task.run_index)?;
                let mut sink = sink.lock().unwrap_or_else(|p| p.into_inner());
                (*sink)(sc, &run)?;
                Ok((task, run))
            })
            .collect()
    });
    results.into_iter().collect()
}
