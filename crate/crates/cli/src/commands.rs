//! The `fit`, `simulate` and `study` commands.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use magfold_core::rng::{label_id, stream};
use magfold_core::sampler::McmcConfig;
use magfold_core::simulation::{
    aggregate, run_seed, simulate_complete, simulate_dropout, DropoutSummary, ReplicateResult, ScenarioConfig,
    StudyModel, StudyRow,
};
use magfold_core::outcome::FixedEffects;

use crate::cli::{FitArgs, McmcArgs, SimulateArgs, StudyArgs};
use crate::config::{self, build_spec, parse_model_letter, parse_temporal, RunConfig, SimulateConfig, StudyConfig};
use crate::data_io::{read_dataset, write_dataset, ReadOptions};
use crate::error::{AppError, AppResult};
use crate::parallel::{fit_chains, pool, run_tasks, RunTask};
use crate::report::{self, read_runs, write_study, FitReport, RunsWriter};

fn create_dir(dir: &Path) -> AppResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(format!("creating {}", dir.display()), e))
}

fn write_text(path: &Path, text: &str) -> AppResult<()> {
    std::fs::write(path, text).map_err(|e| AppError::io(format!("writing {}", path.display()), e))
}

fn apply_mcmc(cfg: &mut McmcConfig, args: &McmcArgs) {
    if let Some(c) = args.chains {
        cfg.n_chains = c;
    }
    if let Some(b) = args.burnin {
        cfg.burn_in = b;
    }
    if let Some(s) = args.samples {
        cfg.n_samples = s;
    }
}

/// Files written by `fit`.
pub const FIT_FILES: [&str; 5] = ["summary.csv", "diagnostics.csv", "acceptance.csv", "draws.csv", "run.toml"];

pub fn fit(args: &FitArgs) -> AppResult<FitReport> {
    let mut cfg: RunConfig = match &args.config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    if args.model.is_some() {
        cfg.model = args.model.clone();
    }
    if args.temporal.is_some() {
        cfg.temporal = args.temporal.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if args.n_times.is_some() {
        cfg.n_times = args.n_times;
    }
    cfg.drop_baseline |= args.drop_baseline;
    apply_mcmc(&mut cfg.mcmc, &args.mcmc);
    if let Some(s) = cfg.seed {
        cfg.mcmc.seed = s;
    }
    cfg.seed = Some(cfg.mcmc.seed);
    if args.out.is_some() {
        cfg.output = args.out.clone();
    }
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("magfold-fit"));
    cfg.mcmc.validate().map_err(|e| AppError::Config(e.to_string()))?;

    let variant = parse_model_letter(cfg.model.as_deref().unwrap_or("B"))?;
    cfg.model = Some(variant.letter().to_string());
    let temporal = cfg.temporal.as_deref().map(parse_temporal).transpose()?;
    let data = read_dataset(
        &args.data,
        ReadOptions {
            n_times: cfg.n_times,
            drop_baseline: cfg.drop_baseline,
        },
    )?;
    let spec = build_spec(variant, temporal, data.n_times(), cfg.prior, cfg.dropout_prior_sd)?;
    cfg.temporal = spec.temporal.map(config::format_temporal);
    info!(
        "fitting model {} to {} subjects ({} observations), {} chains x ({} + {})",
        variant.letter(),
        data.len(),
        data.n_observations(),
        cfg.mcmc.n_chains,
        cfg.mcmc.burn_in,
        cfg.mcmc.n_samples
    );

    let workers = pool(args.mcmc.workers)?;
    let chains = fit_chains(&workers, &data, &spec, &cfg.mcmc)?;
    let report = FitReport::new(&chains)?;
    for (name, r) in report.unconverged() {
        warn!("R-hat for {name} is {r:.3} (above {})", report::RHAT_WARNING);
    }

    create_dir(&out)?;
    report.write_summary(&out.join(FIT_FILES[0]))?;
    report.write_diagnostics(&out.join(FIT_FILES[1]))?;
    report::write_acceptance(&out.join(FIT_FILES[2]), &chains)?;
    report::write_draws(&out.join(FIT_FILES[3]), &chains)?;
    let resolved = toml::to_string(&cfg).map_err(|e| AppError::Config(e.to_string()))?;
    write_text(&out.join(FIT_FILES[4]), &resolved)?;
    Ok(report)
}

#[derive(Serialize)]
struct Truth<'a> {
    seed: u64,
    tad: f64,
    fixed: FixedEffects,
    scenario: &'a ScenarioConfig,
    dropout: Option<DropoutSummary>,
}

/// Files written by `simulate`.
pub const SIMULATE_FILES: [&str; 3] = ["data.csv", "truth.toml", "truth_subjects.csv"];

/// Simulates one cohort. The dataset equals the one a study fits in a run
/// whose derived seed is `seed`.
pub fn simulate(args: &SimulateArgs) -> AppResult<PathBuf> {
    let mut cfg: SimulateConfig = match &args.config {
        Some(p) => config::load(p)?,
        None => SimulateConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.out.is_some() {
        cfg.output = args.out.clone();
    }
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("magfold-sim"));
    let sc = &cfg.scenario;
    sc.validate().map_err(|e| AppError::Scenario(e.to_string()))?;

    let cohort = simulate_complete(sc, &mut stream(cfg.seed, &[label_id("outcome")]))?;
    let (data, dropout) = if sc.dropout_enabled {
        let d = simulate_dropout(&cohort, sc, &mut stream(cfg.seed, &[label_id("dropout")]))?;
        (d.data, Some(d.summary))
    } else {
        (cohort.data.clone(), None)
    };

    create_dir(&out)?;
    write_dataset(&out.join(SIMULATE_FILES[0]), &data)?;
    let truth = Truth {
        seed: cfg.seed,
        tad: cohort.truth.tad,
        fixed: cohort.truth.fixed,
        scenario: sc,
        dropout,
    };
    let text = toml::to_string(&truth).map_err(|e| AppError::Config(e.to_string()))?;
    write_text(&out.join(SIMULATE_FILES[1]), &text)?;

    let path = out.join(SIMULATE_FILES[2]);
    let io = |e: std::io::Error| AppError::io(format!("writing {}", path.display()), e);
    let mut w = std::io::BufWriter::new(File::create(&path).map_err(io)?);
    writeln!(w, "subject_id,exposure,sign,intercept,slope").map_err(io)?;
    for (s, t) in cohort.data.subjects().iter().zip(&cohort.truth.subjects) {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.id,
            t.group.index(),
            t.sign,
            report::num(t.intercept),
            report::num(t.slope)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    info!("wrote {} subjects ({} rows) to {}", data.len(), data.n_observations(), out.display());
    Ok(out)
}

/// Outcome of `study`.
#[derive(Debug)]
pub struct StudyOutcome {
    /// Aggregated rows; empty for a shard of a larger study.
    pub rows: Vec<StudyRow>,
    pub runs_file: Option<PathBuf>,
    pub completed_runs: usize,
}

fn runs_file_name(shard: Option<crate::cli::Shard>) -> String {
    match shard {
        Some(s) if s.count > 1 => format!("runs-shard-{}-of-{}.csv", s.index, s.count),
        _ => "runs.csv".to_string(),
    }
}

/// Aggregates runs of every scenario. Each scenario must have exactly runs
/// `0..n_runs`, each with every model.
pub fn aggregate_runs(
    scenarios: &[ScenarioConfig],
    models: &[StudyModel],
    n_runs: usize,
    master_seed: u64,
    records: &[(u64, ReplicateResult)],
) -> AppResult<Vec<StudyRow>> {
    let mut rows = Vec::new();
    for sc in scenarios {
        let id = sc.scenario_id();
        let mut runs: Vec<ReplicateResult> = Vec::with_capacity(n_runs);
        let mut seen = HashSet::new();
        for (sid, r) in records {
            if *sid != id || r.run_index >= n_runs {
                continue;
            }
            if !seen.insert(r.run_index) {
                return Err(AppError::Config(format!("run {} of scenario {id} appears twice", r.run_index)));
            }
            if r.seed != run_seed(master_seed, sc, r.run_index) {
                return Err(AppError::Config(format!(
                    "run {} of scenario {id} was produced with a different master seed",
                    r.run_index
                )));
            }
            runs.push(r.clone());
        }
        if runs.len() != n_runs {
            return Err(AppError::Config(format!(
                "scenario {id} (σ={}, ω={}, TAD={}) has {} of {n_runs} runs",
                sc.sigma,
                sc.omega,
                sc.tad(),
                runs.len()
            )));
        }
        rows.extend(aggregate(sc, models, &runs)?);
    }
    Ok(rows)
}

fn finish_rows(rows: Vec<StudyRow>, out: &Path, n_runs: usize, scenarios: usize) -> AppResult<Vec<StudyRow>> {
    write_study(&out.join("study.csv"), &rows)?;
    println!("{}", report::pretty_study(&rows));
    let invalid: Vec<&StudyRow> = rows.iter().filter(|r| !r.valid).collect();
    if !invalid.is_empty() {
        for r in &invalid {
            warn!("model {} at σ={} TAD={}: {} of {} runs failed", r.model, r.sigma, r.tad, r.n_failed, r.n_failed + r.n_runs);
        }
        return Err(AppError::StudyInvalid {
            failed: invalid.iter().map(|r| r.n_failed).sum(),
            total: n_runs * scenarios,
        });
    }
    Ok(rows)
}

pub fn study(args: &StudyArgs) -> AppResult<StudyOutcome> {
    let mut cfg: StudyConfig = match &args.config {
        Some(p) => config::load(p)?,
        None => StudyConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.runs {
        cfg.n_runs = n;
    }
    if args.temporal.is_some() {
        cfg.temporal = args.temporal.clone();
    }
    apply_mcmc(&mut cfg.mcmc, &args.mcmc);
    if args.out.is_some() {
        cfg.output = args.out.clone();
    }
    if cfg.n_runs == 0 {
        return Err(AppError::Config("a study needs at least one run".into()));
    }
    cfg.mcmc.validate().map_err(|e| AppError::Config(e.to_string()))?;
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("magfold-study"));
    let scenarios = cfg.resolved_scenarios()?;
    let models = cfg.resolved_models()?;
    for m in &models {
        for sc in &scenarios {
            m.spec(sc.n_times).map_err(|e| AppError::Config(e.to_string()))?;
        }
    }
    create_dir(&out)?;

    if !args.merge.is_empty() {
        let mut records = Vec::new();
        for path in &args.merge {
            records.extend(read_runs(path)?.into_iter().map(|r| (r.scenario_id, r.run)));
        }
        let rows = aggregate_runs(&scenarios, &models, cfg.n_runs, cfg.seed, &records)?;
        let completed = records.len();
        return finish_rows(rows, &out, cfg.n_runs, scenarios.len()).map(|rows| StudyOutcome {
            rows,
            runs_file: None,
            completed_runs: completed,
        });
    }

    let runs_path = out.join(runs_file_name(args.shard));
    let mut previous: Vec<(u64, ReplicateResult)> = Vec::new();
    if args.resume && runs_path.exists() {
        previous = read_runs(&runs_path)?.into_iter().map(|r| (r.scenario_id, r.run)).collect();
        let labels: HashSet<&str> = models.iter().map(|m| m.label.as_str()).collect();
        if previous.iter().any(|(_, r)| r.fits.len() != models.len() || r.fits.iter().any(|f| !labels.contains(f.label.as_str()))) {
            return Err(AppError::Config(format!(
                "{} has runs with a different model set; cannot resume",
                runs_path.display()
            )));
        }
    } else if runs_path.exists() {
        std::fs::remove_file(&runs_path).map_err(|e| AppError::io(format!("removing {}", runs_path.display()), e))?;
    }
    let done: HashSet<(u64, usize)> = previous.iter().map(|(s, r)| (*s, r.run_index)).collect();

    let mut tasks = Vec::new();
    let mut position = 0;
    for (si, sc) in scenarios.iter().enumerate() {
        for run_index in 0..cfg.n_runs {
            let mine = args.shard.is_none_or(|s| s.owns(position));
            position += 1;
            if mine && !done.contains(&(sc.scenario_id(), run_index)) {
                tasks.push(RunTask { scenario: si, run_index });
            }
        }
    }
    info!(
        "{} scenarios x {} runs; {} runs to do, {} already done",
        scenarios.len(),
        cfg.n_runs,
        tasks.len(),
        done.len()
    );
    write_text(
        &out.join("study.toml"),
        &toml::to_string(&cfg).map_err(|e| AppError::Config(e.to_string()))?,
    )?;

    let workers = pool(args.mcmc.workers)?;
    let mut writer = RunsWriter::open(&runs_path)?;
    let total = tasks.len();
    let mut finished = 0usize;
    let fresh = run_tasks(&workers, &scenarios, &models, &cfg.mcmc, cfg.seed, &tasks, |sc, run| {
        writer.append(sc, run)?;
        finished += 1;
        if finished % 10 == 0 || finished == total {
            info!("{finished}/{total} runs finished");
        }
        Ok(())
    })?;

    let completed = previous.len() + fresh.len();
    if args.shard.is_some_and(|s| s.count > 1) {
        info!("shard done; aggregate the shard files with --merge");
        return Ok(StudyOutcome {
            rows: Vec::new(),
            runs_file: Some(runs_path),
            completed_runs: completed,
        });
    }
    let mut records = previous;
    records.extend(fresh.into_iter().map(|(t, r)| (scenarios[t.scenario].scenario_id(), r)));
    let rows = aggregate_runs(&scenarios, &models, cfg.n_runs, cfg.seed, &records)?;
    finish_rows(rows, &out, cfg.n_runs, scenarios.len()).map(|rows| StudyOutcome {
        rows,
        runs_file: Some(runs_path),
        completed_runs: completed,
    })
}
