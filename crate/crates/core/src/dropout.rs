//! Discrete-time competing-risk dropout submodel.
//!
//! At each hazard time `t = 0, …, K-2` a subject still under observation
//! leaves for cause 1 with hazard `λ_t` or for cause 2 with hazard `κ_t`.
//! Both hazards are logistic in a temporal term plus a linear combination of
//! the subject's own random intercept and slope, so the dropout process sees
//! the outcomes only through the shared random effects.
//!
//! The event weights use the product survival `∏ (1-λ_j)(1-κ_j)` with
//! `λ_t` or `κ_t` at the exit time. Summed over every possible `(D, δ)` those
//! weights total `1 + Σ_t S_t λ_t κ_t` rather than one, so
//! [`dropout_log_likelihood`] divides by that total and is a proper
//! distribution over exit patterns; [`competing_risk_log_weight`] exposes
//! the raw weight.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{DropoutCause, DropoutRecord, ExposureGroup};
use crate::distributions::normal_ln_pdf;
use crate::error::structure;
use crate::math;
use crate::outcome::RandomEffects;
use crate::{Error, Result};

/// Functional form of the time component of the hazard predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TemporalKind {
    /// `q0 + q1 t`.
    Linear,
    /// One coefficient per hazard time.
    Flexible,
    /// One coefficient per run of `bucket_size` consecutive hazard times;
    /// leftover times join the last bucket.
    FlexibleGrouped { bucket_size: usize },
}

impl TemporalKind {
    /// Number of temporal coefficients per (cause, group).
    pub fn n_coefficients(&self, n_times: usize) -> usize {
        let hazard_times = n_times.saturating_sub(1);
        match *self {
            TemporalKind::Linear => 2,
            TemporalKind::Flexible => hazard_times,
            TemporalKind::FlexibleGrouped { bucket_size } => (hazard_times / bucket_size.max(1)).max(1),
        }
    }

    /// Index of the coefficient active at hazard time `t` for the flexible kinds.
    pub fn bucket(&self, t: usize, n_times: usize) -> usize {
        match *self {
            TemporalKind::Linear => 0,
            TemporalKind::Flexible => t,
            TemporalKind::FlexibleGrouped { bucket_size } => {
                (t / bucket_size.max(1)).min(self.n_coefficients(n_times) - 1)
            }
        }
    }

    fn validate(&self, n_times: usize) -> Result<()> {
        if n_times < 2 {
            return Err(structure(format!("dropout model needs K >= 2, got {n_times}")));
        }
        if let TemporalKind::FlexibleGrouped { bucket_size: 0 } = self {
            return Err(Error::Config("bucket size must be at least 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn cause_index(cause: DropoutCause) -> Result<usize> {
    match cause {
        DropoutCause::Recovery => Ok(0),
        DropoutCause::Death => Ok(1),
        DropoutCause::Completed => Err(structure("completion is not a hazard cause")),
    }
}

/// Temporal and association coefficients for both causes and both groups.
///
/// Coefficients are stored flat in blocks ordered (cause 1, unexposed),
/// (cause 1, exposed), (cause 2, unexposed), (cause 2, exposed); each block
/// holds the temporal coefficients followed by the two association
/// coefficients for the random intercept and slope.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutParams {
    kind: TemporalKind,
    n_times: usize,
    coefs: Vec<f64>,
}

impl DropoutParams {
    pub fn zeros(kind: TemporalKind, n_times: usize) -> Result<Self> {
        kind.validate(n_times)?;
        let len = 4 * (kind.n_coefficients(n_times) + 2);
        Ok(Self {
            kind,
            n_times,
            coefs: vec![0.0; len],
        })
    }

    pub fn from_coefficients(kind: TemporalKind, n_times: usize, coefs: Vec<f64>) -> Result<Self> {
        let mut out = Self::zeros(kind, n_times)?;
        if coefs.len() != out.coefs.len() {
            return Err(structure(format!(
                "expected {} dropout coefficients, got {}",
                out.coefs.len(),
                coefs.len()
            )));
        }
        out.coefs = coefs;
        Ok(out)
    }

    pub fn kind(&self) -> TemporalKind {
        self.kind
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefs
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefs
    }

    pub(crate) fn block_len(&self) -> usize {
        self.kind.n_coefficients(self.n_times) + 2
    }

    pub(crate) fn block_start(&self, cause: usize, g: ExposureGroup) -> usize {
        (2 * cause + g.index()) * self.block_len()
    }

    /// `(cause index, group)` owning flat coefficient `k`.
    pub(crate) fn owner(&self, k: usize) -> (usize, ExposureGroup) {
        let block = k / self.block_len();
        let g = if block % 2 == 0 {
            ExposureGroup::Unexposed
        } else {
            ExposureGroup::Exposed
        };
        (block / 2, g)
    }

    /// Temporal coefficients for `cause` in group `g`.
    pub fn temporal(&self, cause: DropoutCause, g: ExposureGroup) -> Result<&[f64]> {
        let c = cause_index(cause)?;
        let start = self.block_start(c, g);
        Ok(&self.coefs[start..start + self.block_len() - 2])
    }

    /// Association coefficients (intercept, slope) for `cause` in group `g`.
    pub fn association(&self, cause: DropoutCause, g: ExposureGroup) -> Result<[f64; 2]> {
        let c = cause_index(cause)?;
        let end = self.block_start(c, g) + self.block_len();
        Ok([self.coefs[end - 2], self.coefs[end - 1]])
    }

    pub fn set_temporal(&mut self, cause: DropoutCause, g: ExposureGroup, values: &[f64]) -> Result<()> {
        let c = cause_index(cause)?;
        let n = self.block_len() - 2;
        if values.len() != n {
            return Err(structure(format!("expected {n} temporal coefficients, got {}", values.len())));
        }
        let start = self.block_start(c, g);
        self.coefs[start..start + n].copy_from_slice(values);
        Ok(())
    }

    pub fn set_association(&mut self, cause: DropoutCause, g: ExposureGroup, values: [f64; 2]) -> Result<()> {
        let c = cause_index(cause)?;
        let end = self.block_start(c, g) + self.block_len();
        self.coefs[end - 2] = values[0];
        self.coefs[end - 1] = values[1];
        Ok(())
    }

    /// Temporal term at every hazard time `0..K-1` for a (cause index, group).
    pub(crate) fn fill_profile(&self, cause: usize, g: ExposureGroup, out: &mut [f64]) {
        let start = self.block_start(cause, g);
        let block = &self.coefs[start..start + self.block_len() - 2];
        for (t, slot) in out.iter_mut().enumerate() {
            *slot = match self.kind {
                TemporalKind::Linear => block[0] + block[1] * t as f64,
                kind => block[kind.bucket(t, self.n_times)],
            };
        }
    }

    /// Monitoring names: `q`/`p` for cause 1, `v`/`u` for cause 2, with the
    /// group index first (`q1_3` is the exposed cause-1 coefficient for time
    /// bucket 3, `u01` the unexposed cause-2 slope association).
    pub fn names(&self) -> Vec<String> {
        let n = self.block_len() - 2;
        let mut out = Vec::with_capacity(self.coefs.len());
        for (temporal, assoc) in [("q", "p"), ("v", "u")] {
            for g in 0..2 {
                for k in 0..n {
                    out.push(format!("{temporal}{g}_{k}"));
                }
                for j in 0..2 {
                    out.push(format!("{assoc}{g}{j}"));
                }
            }
        }
        out
    }
}

/// Temporal term `q_m(t)` (cause 1) or `v_m(t)` (cause 2).
pub fn temporal_value(dp: &DropoutParams, cause: DropoutCause, g: ExposureGroup, t: usize) -> Result<f64> {
    if t + 2 > dp.n_times {
        return Err(Error::Domain {
            what: "hazard time",
            value: t as f64,
        });
    }
    let coefs = dp.temporal(cause, g)?;
    Ok(match dp.kind {
        TemporalKind::Linear => coefs[0] + coefs[1] * t as f64,
        kind => coefs[kind.bucket(t, dp.n_times)],
    })
}

fn hazard_predictors(dp: &DropoutParams, re: &RandomEffects, g: ExposureGroup, t: usize) -> Result<[f64; 2]> {
    if re.group != g {
        return Err(structure("random effects do not match the subject's group"));
    }
    let mut out = [0.0; 2];
    for (slot, cause) in out.iter_mut().zip([DropoutCause::Recovery, DropoutCause::Death]) {
        let [a0, a1] = dp.association(cause, g)?;
        *slot = temporal_value(dp, cause, g, t)? + a0 * re.intercept + a1 * re.slope;
    }
    Ok(out)
}

/// Cause-1 and cause-2 hazards `(λ_t, κ_t)`.
pub fn hazards(dp: &DropoutParams, re: &RandomEffects, g: ExposureGroup, t: usize) -> Result<(f64, f64)> {
    let [x1, x2] = hazard_predictors(dp, re, g, t)?;
    Ok((math::sigmoid(x1), math::sigmoid(x2)))
}

/// Log of the product-form weight: the exit-time hazard for the observed
/// cause times `∏_{j<D} (1-λ_j)(1-κ_j)`; completers get the full product.
pub fn competing_risk_log_weight(rec: &DropoutRecord, dp: &DropoutParams, re: &RandomEffects, g: ExposureGroup) -> Result<f64> {
    rec.validate(dp.n_times)?;
    let (kernel, _) = kernel_and_normalizer(rec, dp, re, g)?;
    Ok(kernel)
}

fn kernel_and_normalizer(rec: &DropoutRecord, dp: &DropoutParams, re: &RandomEffects, g: ExposureGroup) -> Result<(f64, f64)> {
    let mut ln_surv = 0.0;
    let mut excess = 0.0;
    let mut kernel = f64::NAN;
    for t in 0..dp.n_times - 1 {
        let [x1, x2] = hazard_predictors(dp, re, g, t)?;
        let (l1, l2) = (math::ln_sigmoid(x1), math::ln_sigmoid(x2));
        if t == rec.last_time {
            match rec.cause {
                DropoutCause::Recovery => kernel = ln_surv + l1,
                DropoutCause::Death => kernel = ln_surv + l2,
                DropoutCause::Completed => {}
            }
        }
        excess += math::exp(ln_surv + l1 + l2);
        ln_surv += math::ln_sigmoid(-x1) + math::ln_sigmoid(-x2);
    }
    if rec.cause == DropoutCause::Completed {
        kernel = ln_surv;
    }
    Ok((kernel, math::ln_1p(excess)))
}

/// Log-probability of the exit pattern `(D, δ)` given the random effects.
pub fn dropout_log_likelihood(
    rec: &DropoutRecord,
    dp: &DropoutParams,
    re: &RandomEffects,
    g: ExposureGroup,
    n_times: usize,
) -> Result<f64> {
    if dp.n_times != n_times {
        return Err(structure(format!(
            "dropout parameters built for K = {}, data has K = {n_times}",
            dp.n_times
        )));
    }
    rec.validate(n_times)?;
    let (kernel, ln_norm) = kernel_and_normalizer(rec, dp, re, g)?;
    Ok(kernel - ln_norm)
}

/// Subject log-likelihood from precomputed temporal profiles.
///
/// `profiles[c]` holds the cause-`c` temporal term at each hazard time and
/// `shifts[c]` the random-effect contribution. `cause` is 0 (completer), 1 or 2.
/// Works with survival products on the probability scale and falls back to
/// the log scale if they underflow.
#[inline]
pub(crate) fn profile_log_likelihood(profiles: [&[f64]; 2], shifts: [f64; 2], last: usize, cause: u8) -> f64 {
    let mut surv = 1.0;
    let mut excess = 0.0;
    let mut kernel = 1.0;
    for t in 0..profiles[0].len() {
        let (h1, s1) = hazard_pair(profiles[0][t] + shifts[0]);
        let (h2, s2) = hazard_pair(profiles[1][t] + shifts[1]);
        if t == last {
            kernel = match cause {
                1 => surv * h1,
                2 => surv * h2,
                _ => kernel,
            };
        }
        excess += surv * h1 * h2;
        surv *= s1 * s2;
    }
    if cause == 0 {
        kernel = surv;
    }
    if kernel < 1e-280 {
        return profile_log_likelihood_ln(profiles, shifts, last, cause);
    }
    math::ln(kernel) - math::ln_1p(excess)
}

/// `(σ(x), 1 - σ(x))` from a single exponential.
#[inline]
fn hazard_pair(x: f64) -> (f64, f64) {
    let e = math::exp(-x.abs());
    let d = 1.0 / (1.0 + e);
    if x >= 0.0 {
        (d, e * d)
    } else {
        (e * d, d)
    }
}

fn profile_log_likelihood_ln(profiles: [&[f64]; 2], shifts: [f64; 2], last: usize, cause: u8) -> f64 {
    let mut ln_surv = 0.0;
    let mut excess = 0.0;
    let mut kernel = 0.0;
    for t in 0..profiles[0].len() {
        let x1 = profiles[0][t] + shifts[0];
        let x2 = profiles[1][t] + shifts[1];
        let sp1 = math::softplus(x1);
        let sp2 = math::softplus(x2);
        // ln σ(x) = x - softplus(x), ln(1 - σ(x)) = -softplus(x)
        let (l1, l2) = (x1 - sp1, x2 - sp2);
        if t == last {
            kernel = match cause {
                1 => ln_surv + l1,
                2 => ln_surv + l2,
                _ => kernel,
            };
        }
        excess += math::exp(ln_surv + l1 + l2);
        ln_surv -= sp1 + sp2;
    }
    if cause == 0 {
        kernel = ln_surv;
    }
    kernel - math::ln_1p(excess)
}

/// Independent `N(0, sd²)` priors over every dropout coefficient.
pub fn dropout_log_prior(dp: &DropoutParams, sd: f64) -> f64 {
    dp.coefs.iter().map(|&c| normal_ln_pdf(c, 0.0, sd)).sum()
}
