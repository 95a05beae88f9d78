//! Output tables. Every number is written with Rust's shortest round-trip
//! formatting, so files parse back to exactly the values in memory and never
//! use exponent notation.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use magfold_core::diagnostics::{ess, rhat, summarize, PosteriorSummary};
use magfold_core::sampler::ChainOutput;
use magfold_core::simulation::{DropoutSummary, ModelFit, ReplicateResult, ScenarioConfig, StudyRow};

use crate::error::{AppError, AppResult};

pub const SUMMARY_HEADER: [&str; 6] = ["quantity", "Mean", "Median", "S.D.", "2.5%Qt.", "97.5%Qt."];
pub const DIAGNOSTICS_HEADER: [&str; 4] = ["quantity", "rhat", "ess", "degenerate"];
pub const ACCEPTANCE_HEADER: [&str; 4] = ["chain", "block", "rate", "scale"];
pub const STUDY_HEADER: [&str; 17] = [
    "Model", "σ", "ω", "TAD", "Bias", "Mean", "Median", "S.D.", "S.E.", "2.5%Qt.", "97.5%Qt.", "MSE", "runs",
    "failed", "valid", "support_violations", "max_rhat",
];
pub const RUNS_HEADER: [&str; 25] = [
    "scenario_id", "sigma", "omega", "tad", "run_index", "seed", "model", "status", "mean", "median", "sd", "q025",
    "q975", "rhat", "support_violations", "n_draws", "n_subjects", "recovered", "died", "event_free",
    "recovery_records", "death_records", "completer_records", "clamped", "error",
];

/// Threshold above which `fit` warns about convergence.
pub const RHAT_WARNING: f64 = 1.05;

pub fn num(x: f64) -> String {
    format!("{x}")
}

fn parse_num(text: &str) -> Option<f64> {
    match text {
        "NaN" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

fn writer(path: &Path) -> AppResult<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| AppError::io(format!("creating {}", path.display()), e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> AppError + '_ {
    move |e| AppError::io(format!("writing {}", path.display()), std::io::Error::other(e))
}

/// One summary row per monitored quantity.
pub struct FitReport {
    pub rows: Vec<(String, PosteriorSummary)>,
    pub diagnostics: Vec<(String, f64, f64, bool)>,
}

impl FitReport {
    pub fn new(chains: &[ChainOutput]) -> AppResult<Self> {
        let names = chains.first().map(|c| c.names.clone()).unwrap_or_default();
        let mut rows = Vec::with_capacity(names.len());
        let mut diagnostics = Vec::with_capacity(names.len());
        for name in names {
            rows.push((name.clone(), summarize(chains, &name)?));
            let (r, degenerate) = if chains.len() > 1 {
                let r = rhat(chains, &name)?;
                (r.value, r.degenerate)
            } else {
                (f64::NAN, false)
            };
            let e = if chains.len() > 1 { ess(chains, &name)? } else { f64::NAN };
            diagnostics.push((name, r, e, degenerate));
        }
        Ok(Self { rows, diagnostics })
    }

    /// Quantities whose R̂ exceeds the warning threshold.
    pub fn unconverged(&self) -> Vec<(&str, f64)> {
        self.diagnostics
            .iter()
            .filter(|d| d.1 > RHAT_WARNING)
            .map(|d| (d.0.as_str(), d.1))
            .collect()
    }

    pub fn write_summary(&self, path: &Path) -> AppResult<()> {
        let mut w = writer(path)?;
        let err = csv_err(path);
        w.write_record(SUMMARY_HEADER).map_err(&err)?;
        for (name, s) in &self.rows {
            w.write_record([name.clone(), num(s.mean), num(s.median), num(s.sd), num(s.q025), num(s.q975)])
                .map_err(&err)?;
        }
        w.flush().map_err(|e| AppError::io(format!("writing {}", path.display()), e))
    }

    pub fn write_diagnostics(&self, path: &Path) -> AppResult<()> {
        let mut w = writer(path)?;
        let err = csv_err(path);
        w.write_record(DIAGNOSTICS_HEADER).map_err(&err)?;
        for (name, r, e, d) in &self.diagnostics {
            w.write_record([name.clone(), num(*r), num(*e), d.to_string()]).map_err(&err)?;
        }
        w.flush().map_err(|e| AppError::io(format!("writing {}", path.display()), e))
    }

    /// Aligned text table of the summaries for the terminal.
    pub fn pretty(&self) -> String {
        let mut out = format!(
            "{:<14}{:>12}{:>12}{:>12}{:>12}{:>12}{:>9}\n",
            "", "Mean", "Median", "S.D.", "2.5%Qt.", "97.5%Qt.", "R-hat"
        );
        for ((name, s), d) in self.rows.iter().zip(&self.diagnostics) {
            out.push_str(&format!(
                "{:<14}{:>12.5}{:>12.5}{:>12.5}{:>12.5}{:>12.5}{:>9.3}\n",
                name, s.mean, s.median, s.sd, s.q025, s.q975, d.1
            ));
        }
        out
    }
}

pub fn write_acceptance(path: &Path, chains: &[ChainOutput]) -> AppResult<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(ACCEPTANCE_HEADER).map_err(&err)?;
    for c in chains {
        for a in &c.acceptance {
            w.write_record([c.chain_index.to_string(), a.block.clone(), num(a.rate), num(a.scale)])
                .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| AppError::io(format!("writing {}", path.display()), e))
}

/// Raw retained draws, one row per chain and iteration.
pub fn write_draws(path: &Path, chains: &[ChainOutput]) -> AppResult<()> {
    let io = |e: std::io::Error| AppError::io(format!("writing {}", path.display()), e);
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    let names = chains.first().map(|c| c.names.clone()).unwrap_or_default();
    writeln!(out, "chain,iteration,log_posterior,{}", names.join(",")).map_err(io)?;
    for c in chains {
        for s in 0..c.n_draws() {
            write!(out, "{},{},{}", c.chain_index, s, num(c.log_posterior[s])).map_err(io)?;
            for q in &c.draws {
                write!(out, ",{}", num(q[s])).map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn write_study(path: &Path, rows: &[StudyRow]) -> AppResult<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(STUDY_HEADER).map_err(&err)?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            num(r.sigma),
            num(r.omega),
            num(r.tad),
            num(r.bias),
            num(r.mean),
            num(r.median),
            num(r.sd),
            num(r.se),
            num(r.q025),
            num(r.q975),
            num(r.mse),
            r.n_runs.to_string(),
            r.n_failed.to_string(),
            r.valid.to_string(),
            r.support_violations.to_string(),
            num(r.max_rhat),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| AppError::io(format!("writing {}", path.display()), e))
}

pub fn pretty_study(rows: &[StudyRow]) -> String {
    let mut out = format!(
        "{:<6}{:>6}{:>8}{:>7}{:>10}{:>9}{:>9}{:>9}{:>9}{:>10}\n",
        "Model", "σ", "ω", "TAD", "Bias", "Mean", "S.D.", "S.E.", "MSE", "failed"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<6}{:>6.2}{:>8.4}{:>7.2}{:>10.5}{:>9.5}{:>9.5}{:>9.5}{:>9.6}{:>10}\n",
            r.model, r.sigma, r.omega, r.tad, r.bias, r.mean, r.sd, r.se, r.mse, r.n_failed
        ));
    }
    out
}

/// A run read back from a runs file, tagged with its scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario_id: u64,
    pub run: ReplicateResult,
}

fn run_rows(scenario: &ScenarioConfig, run: &ReplicateResult) -> Vec<Vec<String>> {
    let d = run.dropout;
    let dropout_cells: Vec<String> = match d {
        Some(d) => [
            d.n_subjects,
            d.recovered,
            d.died,
            d.event_free,
            d.recovery_records,
            d.death_records,
            d.completer_records,
            d.clamped,
        ]
        .iter()
        .map(|x| x.to_string())
        .collect(),
        None => vec![String::new(); 8],
    };
    run.fits
        .iter()
        .map(|f| {
            let (status, s, error) = match &f.summary {
                Ok(s) => ("ok", *s, String::new()),
                Err(e) => (
                    "failed",
                    PosteriorSummary {
                        mean: f64::NAN,
                        median: f64::NAN,
                        sd: f64::NAN,
                        q025: f64::NAN,
                        q975: f64::NAN,
                    },
                    e.clone(),
                ),
            };
            let mut row = vec![
                scenario.scenario_id().to_string(),
                num(scenario.sigma),
                num(scenario.omega),
                num(run.tad),
                run.run_index.to_string(),
                run.seed.to_string(),
                f.label.clone(),
                status.to_string(),
                num(s.mean),
                num(s.median),
                num(s.sd),
                num(s.q025),
                num(s.q975),
                num(f.rhat),
                f.support_violations.to_string(),
                f.n_draws.to_string(),
            ];
            row.extend(dropout_cells.iter().cloned());
            row.push(error);
            row
        })
        .collect()
}

/// Append-only runs file. Each finished run is flushed immediately so an
/// interrupted study can resume.
pub struct RunsWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl RunsWriter {
    pub fn open(path: &Path) -> AppResult<Self> {
        let exists = path.metadata().map(|m| m.len() > 0).unwrap_or(false);
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| AppError::io(format!("opening {}", path.display()), e))?;
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if !exists {
            inner.write_record(RUNS_HEADER).map_err(csv_err(path))?;
            inner.flush().map_err(|e| AppError::io(format!("writing {}", path.display()), e))?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn append(&mut self, scenario: &ScenarioConfig, run: &ReplicateResult) -> AppResult<()> {
        for row in run_rows(scenario, run) {
            self.inner.write_record(&row).map_err(csv_err(&self.path))?;
        }
        self.inner
            .flush()
            .map_err(|e| AppError::io(format!("writing {}", self.path.display()), e))
    }
}

fn runs_schema(path: &Path, line: u64, column: &str, message: impl Into<String>) -> AppError {
    AppError::Schema {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Reads a runs file back into per-run results. Rows of the same scenario
/// and run index are grouped; the order of first appearance is kept.
pub fn read_runs(path: &Path) -> AppResult<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| AppError::io(format!("reading {}", path.display()), std::io::Error::other(e)))?;
    let headers = rdr.headers().map_err(|e| runs_schema(path, 1, "header", e.to_string()))?.clone();
    if headers.iter().ne(RUNS_HEADER.iter().copied()) {
        return Err(runs_schema(path, 1, "header", "not a runs file"));
    }
    let mut out: Vec<RunRecord> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| runs_schema(path, e.position().map_or(0, |p| p.line()), "record", e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize| record.get(i).unwrap_or("");
        let float = |i: usize| parse_num(get(i)).ok_or_else(|| runs_schema(path, line, RUNS_HEADER[i], format!("bad number `{}`", get(i))));
        let int = |i: usize| get(i).parse::<u64>().map_err(|_| runs_schema(path, line, RUNS_HEADER[i], format!("bad integer `{}`", get(i))));
        let scenario_id = int(0)?;
        let run_index = int(4)? as usize;
        let summary = match get(7) {
            "ok" => Ok(PosteriorSummary {
                mean: float(8)?,
                median: float(9)?,
                sd: float(10)?,
                q025: float(11)?,
                q975: float(12)?,
            }),
            "failed" => Err(get(24).to_string()),
            other => return Err(runs_schema(path, line, "status", format!("unknown status `{other}`"))),
        };
        let fit = ModelFit {
            label: get(6).to_string(),
            summary,
            rhat: float(13)?,
            support_violations: int(14)? as usize,
            n_draws: int(15)? as usize,
        };
        let dropout = if get(16).is_empty() {
            None
        } else {
            let count = |i: usize| int(i).map(|x| x as usize);
            Some(DropoutSummary {
                n_subjects: count(16)?,
                recovered: count(17)?,
                died: count(18)?,
                event_free: count(19)?,
                recovery_records: count(20)?,
                death_records: count(21)?,
                completer_records: count(22)?,
                clamped: count(23)?,
            })
        };
        match out.iter_mut().find(|r| r.scenario_id == scenario_id && r.run.run_index == run_index) {
            Some(r) => {
                if r.run.fits.iter().any(|f| f.label == fit.label) {
                    return Err(runs_schema(path, line, "model", format!("duplicate model {} for run {run_index}", fit.label)));
                }
                r.run.fits.push(fit);
            }
            None => out.push(RunRecord {
                scenario_id,
                run: ReplicateResult {
                    run_index,
                    seed: int(5)?,
                    tad: float(3)?,
                    fits: vec![fit],
                    dropout,
                },
            }),
        }
    }
    Ok(out)
}
