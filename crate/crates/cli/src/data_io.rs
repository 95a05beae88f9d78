//! Long-format CSV datasets: one row per subject and measurement time.
//!
//! Columns are `subject_id, exposure, time, z, dropout_cause`. The cause may
//! be repeated on every row of a subject, given only on some rows, or left
//! out entirely; a subject observed through the last time without a cause is
//! a completer.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use magfold_core::data::{DropoutCause, ExposureGroup, LongitudinalDataset, Observation, SubjectData};

use crate::error::{AppError, AppResult};

pub const HEADER: [&str; 5] = ["subject_id", "exposure", "time", "z", "dropout_cause"];

/// How to interpret a dataset file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadOptions {
    /// Measurement times in the file; inferred from the largest time if absent.
    pub n_times: Option<usize>,
    /// Discard the `time = 0` rows and shift the remaining times down by one.
    pub drop_baseline: bool,
}

struct Row {
    line: u64,
    time: usize,
    z: f64,
}

struct PendingSubject {
    id: String,
    group: ExposureGroup,
    rows: Vec<Row>,
    cause: Option<(DropoutCause, u64)>,
}

fn schema(path: &Path, line: u64, column: &str, message: impl Into<String>) -> AppError {
    AppError::Schema {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

fn dataset_error(path: &Path, message: impl Into<String>) -> AppError {
    AppError::Dataset {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn read_dataset(path: &Path, opts: ReadOptions) -> AppResult<LongitudinalDataset> {
    let file = File::open(path).map_err(|e| AppError::io(format!("opening {}", path.display()), e))?;
    read_dataset_from(file, path, opts)
}

/// Parses a dataset from any reader; `path` is used in diagnostics only.
pub fn read_dataset_from<R: std::io::Read>(reader: R, path: &Path, opts: ReadOptions) -> AppResult<LongitudinalDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| schema(path, 1, "header", e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(&HEADER[..4]) {
        *slot = col(name).ok_or_else(|| schema(path, 1, name, "required column missing"))?;
    }
    let cause_col = col(HEADER[4]);

    let mut order: Vec<PendingSubject> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            schema(path, line, "record", e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let id = field(idx[0]);
        if id.is_empty() {
            return Err(schema(path, line, "subject_id", "empty subject id"));
        }
        let exposure = field(idx[1])
            .parse::<u8>()
            .ok()
            .and_then(|x| ExposureGroup::from_indicator(x).ok())
            .ok_or_else(|| schema(path, line, "exposure", format!("expected 0 or 1, got `{}`", field(idx[1]))))?;
        let time = field(idx[2])
            .parse::<usize>()
            .map_err(|_| schema(path, line, "time", format!("expected a nonnegative integer, got `{}`", field(idx[2]))))?;
        let z = field(idx[3])
            .parse::<f64>()
            .ok()
            .filter(|z| z.is_finite() && *z >= 0.0)
            .ok_or_else(|| schema(path, line, "z", format!("expected a nonnegative number, got `{}`", field(idx[3]))))?;
        let cause = match cause_col.map(field) {
            None | Some("") => None,
            Some(text) => Some(
                text.parse::<u8>()
                    .ok()
                    .and_then(|c| DropoutCause::from_code(c).ok())
                    .ok_or_else(|| schema(path, line, "dropout_cause", format!("expected 0, 1 or 2, got `{text}`")))?,
            ),
        };

        let slot = *by_id.entry(id.to_string()).or_insert_with(|| {
            order.push(PendingSubject {
                id: id.to_string(),
                group: exposure,
                rows: Vec::new(),
                cause: None,
            });
            order.len() - 1
        });
        let subject = &mut order[slot];
        if subject.group != exposure {
            return Err(schema(path, line, "exposure", format!("exposure changes within subject {id}")));
        }
        if let Some(c) = cause {
            match subject.cause {
                Some((prev, _)) if prev != c => {
                    return Err(schema(path, line, "dropout_cause", format!("dropout cause changes within subject {id}")))
                }
                Some(_) => {}
                None => subject.cause = Some((c, line)),
            }
        }
        subject.rows.push(Row { line, time, z });
    }
    if order.is_empty() {
        return Err(dataset_error(path, "no data rows"));
    }

    for s in &mut order {
        if opts.drop_baseline {
            s.rows.retain(|r| r.time > 0);
            for r in &mut s.rows {
                r.time -= 1;
            }
            if s.rows.is_empty() {
                return Err(dataset_error(path, format!("subject {} has only a baseline row", s.id)));
            }
        }
        s.rows.sort_by_key(|r| r.time);
        for (expected, r) in s.rows.iter().enumerate() {
            if r.time != expected {
                let message = if r.time < expected {
                    format!("duplicate time {} for subject {}", r.time, s.id)
                } else {
                    format!("subject {}: times must be contiguous from 0, expected {expected}, found {}", s.id, r.time)
                };
                return Err(schema(path, r.line, "time", message));
            }
        }
    }

    let max_time = order.iter().map(|s| s.rows.len() - 1).max().unwrap_or(0);
    let n_times = match opts.n_times {
        Some(k) => {
            let k = if opts.drop_baseline { k.saturating_sub(1) } else { k };
            if k <= max_time {
                return Err(dataset_error(path, format!("time {max_time} found but the grid has {k} points")));
            }
            k
        }
        None => max_time + 1,
    };
    if n_times < 2 {
        return Err(dataset_error(path, "need at least two measurement times"));
    }

    let mut subjects = Vec::with_capacity(order.len());
    for s in order {
        let last = s.rows.len() - 1;
        let cause = match s.cause {
            Some((c, _)) => c,
            None if last + 1 == n_times => DropoutCause::Completed,
            None => {
                return Err(schema(
                    path,
                    s.rows[last].line,
                    "dropout_cause",
                    format!("subject {} ends before the last time and needs a dropout cause", s.id),
                ))
            }
        };
        let subject = SubjectData {
            observations: s.rows.iter().map(|r| Observation { time: r.time, z: r.z }).collect(),
            dropout: magfold_core::data::DropoutRecord { last_time: last, cause },
            id: s.id,
            group: s.group,
        };
        if let Err(e) = subject.validate(n_times) {
            let line = s.cause.map_or(s.rows[last].line, |(_, l)| l);
            return Err(schema(path, line, "dropout_cause", format!("subject {}: {e}", subject.id)));
        }
        subjects.push(subject);
    }
    LongitudinalDataset::new(n_times, subjects).map_err(|e| dataset_error(path, e.to_string()))
}

/// Writes a dataset in the same layout, cause repeated on every row.
pub fn write_dataset(path: &Path, data: &LongitudinalDataset) -> AppResult<()> {
    let io = |e: std::io::Error| AppError::io(format!("writing {}", path.display()), e);
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "{}", HEADER.join(",")).map_err(io)?;
    for s in data.subjects() {
        for o in &s.observations {
            writeln!(
                out,
                "{},{},{},{},{}",
                s.id,
                s.group.index(),
                o.time,
                o.z,
                s.dropout.cause.code()
            )
            .map_err(io)?;
        }
    }
    out.flush().map_err(io)
}
