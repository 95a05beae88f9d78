//! Longitudinal magnitude data with dropout records.
//!
//! Measurement times are the integer grid `t = 0, 1, …, K-1`. A subject is
//! observed at every time from 0 through its last observed time `D`, then
//! either completes follow-up (`D = K-1`) or drops out for one of two causes.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;

use crate::error::structure;
use crate::{Error, Result};

/// Binary exposure indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ExposureGroup {
    Unexposed = 0,
    Exposed = 1,
}

impl ExposureGroup {
    pub const BOTH: [ExposureGroup; 2] = [ExposureGroup::Unexposed, ExposureGroup::Exposed];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_indicator(x: u8) -> Result<Self> {
        match x {
            0 => Ok(Self::Unexposed),
            1 => Ok(Self::Exposed),
            other => Err(structure(format!("exposure indicator must be 0 or 1, got {other}"))),
        }
    }
}

/// One magnitude measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub time: usize,
    pub z: f64,
}

/// Reason a subject's follow-up ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DropoutCause {
    /// Observed through the final measurement time.
    Completed = 0,
    /// Cause 1 (recovery-type).
    Recovery = 1,
    /// Cause 2 (death-type).
    Death = 2,
}

impl DropoutCause {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Self::Completed),
            1 => Ok(Self::Recovery),
            2 => Ok(Self::Death),
            other => Err(structure(format!("dropout cause must be 0, 1 or 2, got {other}"))),
        }
    }
}

/// Last observed time `D` and cause `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DropoutRecord {
    pub last_time: usize,
    pub cause: DropoutCause,
}

impl DropoutRecord {
    pub fn completer(n_times: usize) -> Self {
        Self {
            last_time: n_times - 1,
            cause: DropoutCause::Completed,
        }
    }

    /// Checks `δ = 0 ⟺ D = K-1` and `δ ∈ {1,2} ⟹ D ≤ K-2`.
    pub fn validate(&self, n_times: usize) -> Result<()> {
        let ok = match self.cause {
            DropoutCause::Completed => self.last_time + 1 == n_times,
            _ => self.last_time + 2 <= n_times,
        };
        if ok {
            Ok(())
        } else {
            Err(structure(format!(
                "inconsistent dropout record (D = {}, cause = {}) for K = {}",
                self.last_time,
                self.cause.code(),
                n_times
            )))
        }
    }
}

/// A subject's group, observed magnitudes and dropout record.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectData {
    pub id: String,
    pub group: ExposureGroup,
    pub observations: Vec<Observation>,
    pub dropout: DropoutRecord,
}

impl SubjectData {
    /// Builds a subject from magnitudes observed at `t = 0, 1, …`.
    pub fn from_magnitudes(
        id: impl Into<String>,
        group: ExposureGroup,
        z: &[f64],
        cause: DropoutCause,
    ) -> Self {
        let observations = z
            .iter()
            .enumerate()
            .map(|(time, &z)| Observation { time, z })
            .collect::<Vec<_>>();
        let last_time = observations.len().saturating_sub(1);
        Self {
            id: id.into(),
            group,
            observations,
            dropout: DropoutRecord { last_time, cause },
        }
    }

    pub fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.z)
    }

    /// Structural checks that do not depend on `K`.
    pub fn validate_observations(&self) -> Result<()> {
        if self.observations.is_empty() {
            return Err(structure(format!("subject {} has no observations", self.id)));
        }
        for (expected, obs) in self.observations.iter().enumerate() {
            if obs.time != expected {
                return Err(structure(format!(
                    "subject {}: expected time {expected}, found {}",
                    self.id, obs.time
                )));
            }
            if !(obs.z >= 0.0) || !obs.z.is_finite() {
                return Err(Error::Domain {
                    what: "z",
                    value: obs.z,
                });
            }
        }
        let last = self.observations.len() - 1;
        if self.dropout.last_time != last {
            return Err(structure(format!(
                "subject {}: last observation at {last} but D = {}",
                self.id, self.dropout.last_time
            )));
        }
        Ok(())
    }

    pub fn validate(&self, n_times: usize) -> Result<()> {
        self.validate_observations()?;
        self.dropout.validate(n_times)
    }
}

/// Subjects sharing a measurement grid of `n_times` points.
#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalDataset {
    n_times: usize,
    subjects: Vec<SubjectData>,
}

impl LongitudinalDataset {
    pub fn new(n_times: usize, subjects: Vec<SubjectData>) -> Result<Self> {
        if n_times < 2 {
            return Err(structure(format!("need at least two measurement times, got {n_times}")));
        }
        if subjects.is_empty() {
            return Err(structure("dataset has no subjects"));
        }
        for s in &subjects {
            s.validate(n_times)?;
        }
        Ok(Self { n_times, subjects })
    }

    /// Number of measurement times `K`.
    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn subjects(&self) -> &[SubjectData] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn n_observations(&self) -> usize {
        self.subjects.iter().map(|s| s.observations.len()).sum()
    }

    pub fn into_subjects(self) -> Vec<SubjectData> {
        self.subjects
    }

    /// Indices of the subjects in each exposure group.
    pub fn group_indices(&self) -> [Vec<usize>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for (i, s) in self.subjects.iter().enumerate() {
            out[s.group.index()].push(i);
        }
        out
    }
}
