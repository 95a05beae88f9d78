//! Data-generating mechanisms and Monte Carlo study machinery.
//!
//! The complete-data mechanism draws, for each subject, an exposure group,
//! a trajectory sign `γ ∈ {-1, +1}` and group-specific random effects, then
//! signed outcomes `Y_it ~ N(γ μ_it, σ²)` whose magnitudes are kept.
//!
//! The dropout mechanism attaches competing recovery and death times that
//! depend on the subject's mean expected trajectory `R`:
//! `T^r = shift + Gamma(1 + 10R, 50R)` and `T^d = Gamma(1 + 0.5/R, 0.3/R)`,
//! both in shape–scale form. With `T = min(T^r, T^d)`, the subject's last
//! observed time is `⌈T⌉ - 1` when that falls before the final measurement
//! time; otherwise the subject completes follow-up. Ties go to recovery.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::data::{DropoutCause, ExposureGroup, LongitudinalDataset, SubjectData};
use crate::diagnostics::{pooled, rhat, summarize, PosteriorSummary};
use crate::distributions::{normal_sample, GammaShapeScale};
use crate::dropout::TemporalKind;
use crate::math;
use crate::model::{ModelSpec, ModelVariant};
use crate::outcome::{average_distance, FixedEffects, OutcomePriorConfig};
use crate::rng::{derive_seed, label_id, stream, SimRng};
use crate::sampler::{run_chains, McmcConfig};
use crate::{Error, Result};

/// Constants of the competing-risk dropout mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DropoutMechanism {
    pub recovery_shift: f64,
    /// Recovery shape is `recovery_shape_base + recovery_shape_slope · R`.
    pub recovery_shape_base: f64,
    pub recovery_shape_slope: f64,
    /// Recovery scale is `recovery_scale_slope · R`.
    pub recovery_scale_slope: f64,
    /// Death shape is `death_shape_base + death_shape_coef / R`.
    pub death_shape_base: f64,
    pub death_shape_coef: f64,
    /// Death scale is `death_scale_coef / R`.
    pub death_scale_coef: f64,
    /// Clock time of the first measurement; measurement `j` happens at
    /// `first_measurement_time + j`. A subject is observed at every
    /// measurement strictly before its event time.
    pub first_measurement_time: f64,
    /// Event times up to this value count as events in the cohort summary;
    /// `None` means the time of the last measurement.
    pub summary_horizon: Option<f64>,
    /// Floor applied to nonpositive `R`.
    pub r_floor: f64,
}

impl Default for DropoutMechanism {
    fn default() -> Self {
        Self {
            recovery_shift: 0.75,
            recovery_shape_base: 1.0,
            recovery_shape_slope: 10.0,
            recovery_scale_slope: 50.0,
            death_shape_base: 1.0,
            death_shape_coef: 0.5,
            death_scale_coef: 0.3,
            first_measurement_time: 1.0,
            summary_horizon: None,
            r_floor: 1e-6,
        }
    }
}

/// One simulation scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ScenarioConfig {
    pub n_subjects: usize,
    pub n_times: usize,
    /// Probability of being exposed.
    pub assign_prob: f64,
    /// Probability that a subject's trajectory sign is negative.
    pub sign_neg_prob: f64,
    pub c0: f64,
    pub c1: f64,
    pub d0: f64,
    pub d1: f64,
    pub sigma: f64,
    /// Random-effect SDs are `ω` times the matching line coefficient.
    pub omega: f64,
    pub dropout_enabled: bool,
    pub dropout: DropoutMechanism,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_subjects: 100,
            n_times: 7,
            assign_prob: 0.5,
            sign_neg_prob: 0.6,
            c0: 0.15,
            c1: 0.015,
            d0: 0.08,
            d1: 0.005,
            sigma: 0.06,
            omega: 0.5,
            dropout_enabled: false,
            dropout: DropoutMechanism::default(),
        }
    }
}

/// The four exposed-group intercepts of the study grid.
pub const D0_GRID: [f64; 4] = [0.08, 0.06, 0.05, 0.04];
pub const SIGMA_GRID: [f64; 2] = [0.08, 0.06];
pub const OMEGA_GRID: [f64; 2] = [0.5, 1.0 / 2.4];

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 {
            return Err(Error::Config("n_subjects must be positive".to_string()));
        }
        if self.n_times < 2 {
            return Err(Error::Config(format!("K must be at least 2, got {}", self.n_times)));
        }
        for (what, p) in [("assign_prob", self.assign_prob), ("sign_neg_prob", self.sign_neg_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parameter { what, value: p });
            }
        }
        for (what, v) in [("c0", self.c0), ("c1", self.c1), ("d0", self.d0), ("d1", self.d1)] {
            if !v.is_finite() {
                return Err(Error::Parameter { what, value: v });
            }
        }
        for (what, v) in [("sigma", self.sigma), ("omega", self.omega)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parameter { what, value: v });
            }
        }
        let m = &self.dropout;
        for (what, v) in [
            ("recovery_shape_slope", m.recovery_shape_slope),
            ("recovery_scale_slope", m.recovery_scale_slope),
            ("death_shape_coef", m.death_shape_coef),
            ("death_scale_coef", m.death_scale_coef),
            ("r_floor", m.r_floor),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter { what, value: v });
            }
        }
        for (what, v) in [
            ("recovery_shift", m.recovery_shift),
            ("recovery_shape_base", m.recovery_shape_base),
            ("death_shape_base", m.death_shape_base),
            ("first_measurement_time", m.first_measurement_time),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parameter { what, value: v });
            }
        }
        if let Some(h) = m.summary_horizon {
            if !(h > 0.0) {
                return Err(Error::Parameter { what: "summary_horizon", value: h });
            }
        }
        Ok(())
    }

    pub fn fixed_effects(&self) -> FixedEffects {
        FixedEffects::with_lines([self.c0, self.c1, self.d0, self.d1], self.sigma * self.sigma)
    }

    /// True average distance of the scenario.
    pub fn tad(&self) -> f64 {
        average_distance(&self.fixed_effects(), self.n_times)
    }

    /// Stable identifier derived from every field, used to seed runs.
    pub fn scenario_id(&self) -> u64 {
        let m = &self.dropout;
        let fields = [
            self.n_subjects as u64,
            self.n_times as u64,
            self.assign_prob.to_bits(),
            self.sign_neg_prob.to_bits(),
            self.c0.to_bits(),
            self.c1.to_bits(),
            self.d0.to_bits(),
            self.d1.to_bits(),
            self.sigma.to_bits(),
            self.omega.to_bits(),
            self.dropout_enabled as u64,
            m.recovery_shift.to_bits(),
            m.recovery_shape_base.to_bits(),
            m.recovery_shape_slope.to_bits(),
            m.recovery_scale_slope.to_bits(),
            m.death_shape_base.to_bits(),
            m.death_shape_coef.to_bits(),
            m.death_scale_coef.to_bits(),
            m.summary_horizon.map_or(u64::MAX, f64::to_bits),
            m.r_floor.to_bits(),
        ];
        let id = derive_seed(0, &fields);
        if self.dropout_enabled {
            derive_seed(id, &[m.first_measurement_time.to_bits()])
        } else {
            id
        }
    }

    /// The 16 complete-data cells: `σ × d0 × ω`.
    pub fn complete_data_grid() -> Vec<Self> {
        let mut out = Vec::new();
        for omega in OMEGA_GRID {
            for sigma in SIGMA_GRID {
                for d0 in D0_GRID {
                    out.push(Self { sigma, d0, omega, ..Self::default() });
                }
            }
        }
        out
    }

    /// The four dropout cells at `σ = 0.06`, `ω = 1/2`.
    pub fn dropout_grid() -> Vec<Self> {
        D0_GRID
            .iter()
            .map(|&d0| Self {
                d0,
                dropout_enabled: true,
                ..Self::default()
            })
            .collect()
    }
}

/// Generating values for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectTruth {
    pub group: ExposureGroup,
    /// `-1` or `+1`.
    pub sign: i8,
    pub intercept: f64,
    pub slope: f64,
    /// Expected trajectory `μ_it` at every measurement time.
    pub mu: Vec<f64>,
}

impl SubjectTruth {
    /// Mean expected trajectory over all measurement times.
    pub fn mean_trajectory(&self) -> f64 {
        self.mu.iter().sum::<f64>() / self.mu.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub tad: f64,
    pub fixed: FixedEffects,
    pub subjects: Vec<SubjectTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCohort {
    pub data: LongitudinalDataset,
    pub truth: GroundTruth,
}

/// Complete longitudinal magnitudes for one cohort.
pub fn simulate_complete(sc: &ScenarioConfig, rng: &mut SimRng) -> Result<SimulatedCohort> {
    sc.validate()?;
    let lines = [sc.c0, sc.c1, sc.d0, sc.d1];
    let mut subjects = Vec::with_capacity(sc.n_subjects);
    let mut truths = Vec::with_capacity(sc.n_subjects);
    for i in 0..sc.n_subjects {
        let exposed = rng.random::<f64>() < sc.assign_prob;
        let group = if exposed { ExposureGroup::Exposed } else { ExposureGroup::Unexposed };
        let sign: i8 = if rng.random::<f64>() < sc.sign_neg_prob { -1 } else { 1 };
        let (b0, b1) = (lines[2 * group.index()], lines[2 * group.index() + 1]);
        let intercept = normal_sample(rng, 0.0, b0.abs() * sc.omega);
        let slope = normal_sample(rng, 0.0, b1.abs() * sc.omega);
        let mu: Vec<f64> = (0..sc.n_times).map(|t| b0 + intercept + (b1 + slope) * t as f64).collect();
        let z: Vec<f64> = mu
            .iter()
            .map(|&m| normal_sample(rng, sign as f64 * m, sc.sigma).abs())
            .collect();
        subjects.push(SubjectData::from_magnitudes(
            format!("S{:04}", i + 1),
            group,
            &z,
            DropoutCause::Completed,
        ));
        truths.push(SubjectTruth { group, sign, intercept, slope, mu });
    }
    Ok(SimulatedCohort {
        data: LongitudinalDataset::new(sc.n_times, subjects)?,
        truth: GroundTruth {
            tad: sc.tad(),
            fixed: sc.fixed_effects(),
            subjects: truths,
        },
    })
}

/// Dropout time and cause of one subject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutDraw {
    pub recovery_time: f64,
    pub death_time: f64,
    /// `R` after flooring.
    pub r: f64,
    pub clamped: bool,
}

impl DropoutDraw {
    pub fn time(&self) -> f64 {
        self.recovery_time.min(self.death_time)
    }

    pub fn cause(&self) -> DropoutCause {
        if self.recovery_time <= self.death_time {
            DropoutCause::Recovery
        } else {
            DropoutCause::Death
        }
    }
}

/// Competing recovery and death times for mean trajectory `r`.
pub fn draw_dropout_times(mech: &DropoutMechanism, r: f64, rng: &mut SimRng) -> Result<DropoutDraw> {
    let clamped = !(r > 0.0);
    let r = if clamped { mech.r_floor } else { r };
    let recovery = GammaShapeScale::new(
        mech.recovery_shape_base + mech.recovery_shape_slope * r,
        mech.recovery_scale_slope * r,
    )?;
    let death = GammaShapeScale::new(mech.death_shape_base + mech.death_shape_coef / r, mech.death_scale_coef / r)?;
    Ok(DropoutDraw {
        recovery_time: mech.recovery_shift + recovery.sample(rng),
        death_time: death.sample(rng),
        r,
        clamped,
    })
}

/// Last observed time and cause implied by an event time, for `K`
/// measurements starting at clock time `first_time`. Events after the last
/// measurement make a completer; events before the first one still keep it.
pub fn dropout_record_for(time: f64, cause: DropoutCause, n_times: usize, first_time: f64) -> (usize, DropoutCause) {
    if time > first_time + (n_times - 1) as f64 {
        return (n_times - 1, DropoutCause::Completed);
    }
    let last = (math::ceil(time - first_time) - 1.0).max(0.0);
    (last as usize, cause)
}

/// Event counts of one cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DropoutSummary {
    pub n_subjects: usize,
    /// Events by the summary horizon.
    pub recovered: usize,
    pub died: usize,
    pub event_free: usize,
    /// Records as they appear in the data.
    pub recovery_records: usize,
    pub death_records: usize,
    pub completer_records: usize,
    /// Subjects whose `R` was floored.
    pub clamped: usize,
}

impl DropoutSummary {
    pub fn recovery_fraction(&self) -> f64 {
        self.recovered as f64 / self.n_subjects as f64
    }

    pub fn death_fraction(&self) -> f64 {
        self.died as f64 / self.n_subjects as f64
    }

    pub fn event_free_fraction(&self) -> f64 {
        self.event_free as f64 / self.n_subjects as f64
    }

    pub fn completer_record_fraction(&self) -> f64 {
        self.completer_records as f64 / self.n_subjects as f64
    }

    pub fn merge(&mut self, other: &DropoutSummary) {
        self.n_subjects += other.n_subjects;
        self.recovered += other.recovered;
        self.died += other.died;
        self.event_free += other.event_free;
        self.recovery_records += other.recovery_records;
        self.death_records += other.death_records;
        self.completer_records += other.completer_records;
        self.clamped += other.clamped;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropoutCohort {
    pub data: LongitudinalDataset,
    pub draws: Vec<DropoutDraw>,
    pub summary: DropoutSummary,
}

/// Applies the dropout mechanism to a complete cohort, truncating each
/// subject's observations after its last observed time.
pub fn simulate_dropout(cohort: &SimulatedCohort, sc: &ScenarioConfig, rng: &mut SimRng) -> Result<DropoutCohort> {
    sc.validate()?;
    let k = cohort.data.n_times();
    let first_time = sc.dropout.first_measurement_time;
    let horizon = sc.dropout.summary_horizon.unwrap_or(first_time + (k - 1) as f64);
    let mut summary = DropoutSummary {
        n_subjects: cohort.data.len(),
        ..DropoutSummary::default()
    };
    let mut subjects = Vec::with_capacity(cohort.data.len());
    let mut draws = Vec::with_capacity(cohort.data.len());
    for (s, truth) in cohort.data.subjects().iter().zip(&cohort.truth.subjects) {
        let d = draw_dropout_times(&sc.dropout, truth.mean_trajectory(), rng)?;
        summary.clamped += d.clamped as usize;
        if d.time() <= horizon {
            match d.cause() {
                DropoutCause::Recovery => summary.recovered += 1,
                _ => summary.died += 1,
            }
        } else {
            summary.event_free += 1;
        }
        let (last, cause) = dropout_record_for(d.time(), d.cause(), k, first_time);
        match cause {
            DropoutCause::Recovery => summary.recovery_records += 1,
            DropoutCause::Death => summary.death_records += 1,
            DropoutCause::Completed => summary.completer_records += 1,
        }
        let z: Vec<f64> = s.magnitudes().take(last + 1).collect();
        subjects.push(SubjectData::from_magnitudes(s.id.clone(), s.group, &z, cause));
        draws.push(d);
    }
    Ok(DropoutCohort {
        data: LongitudinalDataset::new(k, subjects)?,
        draws,
        summary,
    })
}

/// A model fitted in a study, identified by its table label.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StudyModel {
    pub label: String,
    pub variant: ModelVariant,
    pub temporal: Option<TemporalKind>,
    pub prior: OutcomePriorConfig,
}

impl StudyModel {
    pub fn new(label: &str, variant: ModelVariant, temporal: Option<TemporalKind>) -> Self {
        Self {
            label: label.to_string(),
            variant,
            temporal,
            prior: OutcomePriorConfig::default(),
        }
    }

    /// Folded (F) and linear (L) models for complete data.
    pub fn complete_data_models() -> Vec<Self> {
        alloc::vec![
            Self::new("F", ModelVariant::FoldedMixed, None),
            Self::new("L", ModelVariant::LinearReference, None),
        ]
    }

    /// Reference (I), linear joint (II) and flexible joint (III) models.
    pub fn dropout_models() -> Vec<Self> {
        alloc::vec![
            Self::new("I", ModelVariant::FoldedMixed, None),
            Self::new("II", ModelVariant::JointLinear, Some(TemporalKind::Linear)),
            Self::new("III", ModelVariant::JointFlexible, Some(TemporalKind::Flexible)),
        ]
    }

    pub fn spec(&self, n_times: usize) -> Result<ModelSpec> {
        let mut spec = ModelSpec::new(self.variant, n_times, self.temporal)?;
        spec.outcome_prior = self.prior;
        spec.validate()?;
        Ok(spec)
    }
}

/// Result of fitting one model in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub label: String,
    pub summary: core::result::Result<PosteriorSummary, String>,
    pub rhat: f64,
    /// Retained draws breaking a line-coefficient sign or SD bound.
    pub support_violations: usize,
    pub n_draws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub run_index: usize,
    pub seed: u64,
    pub tad: f64,
    pub fits: Vec<ModelFit>,
    pub dropout: Option<DropoutSummary>,
}

/// Seed of run `run_index` of a scenario.
pub fn run_seed(master_seed: u64, sc: &ScenarioConfig, run_index: usize) -> u64 {
    derive_seed(master_seed, &[sc.scenario_id(), run_index as u64])
}

/// The dataset of one run, as fitted by every model.
pub fn replicate_data(sc: &ScenarioConfig, seed: u64) -> Result<(LongitudinalDataset, Option<DropoutSummary>)> {
    let mut rng = stream(seed, &[label_id("outcome")]);
    let cohort = simulate_complete(sc, &mut rng)?;
    if sc.dropout_enabled {
        let mut rng = stream(seed, &[label_id("dropout")]);
        let out = simulate_dropout(&cohort, sc, &mut rng)?;
        Ok((out.data, Some(out.summary)))
    } else {
        Ok((cohort.data, None))
    }
}

fn count_violations(chains: &[crate::sampler::ChainOutput], omega: f64) -> Result<usize> {
    let lines: Vec<Vec<f64>> = ["c0", "c1", "d0", "d1"].iter().map(|q| pooled(chains, q)).collect::<Result<_>>()?;
    let taus: Vec<Vec<f64>> = ["tau_a0", "tau_a1", "tau_b0", "tau_b1"]
        .iter()
        .map(|q| pooled(chains, q))
        .collect::<Result<_>>()?;
    Ok((0..lines[0].len())
        .filter(|&s| (0..4).any(|k| !(lines[k][s] >= 0.0) || !(taus[k][s] > 0.0 && taus[k][s] < lines[k][s] * omega)))
        .count())
}

/// Fits every model to one run's dataset and summarizes the average
/// distance. Sampler failures are recorded per model rather than returned.
pub fn run_replicate(
    sc: &ScenarioConfig,
    models: &[StudyModel],
    mcmc: &McmcConfig,
    master_seed: u64,
    run_index: usize,
) -> Result<ReplicateResult> {
    let seed = run_seed(master_seed, sc, run_index);
    let (data, dropout) = replicate_data(sc, seed)?;
    let mut fits = Vec::with_capacity(models.len());
    for m in models {
        let spec = m.spec(sc.n_times)?;
        let cfg = McmcConfig {
            seed: derive_seed(seed, &[label_id(&m.label)]),
            ..mcmc.clone()
        };
        let fit = match run_chains(&data, &spec, &cfg) {
            Ok(chains) => {
                let violations = if m.variant.is_folded() {
                    count_violations(&chains, spec.outcome_prior.omega)?
                } else {
                    0
                };
                let rhat = if chains.len() > 1 { rhat(&chains, "AD")?.value } else { f64::NAN };
                ModelFit {
                    label: m.label.clone(),
                    summary: summarize(&chains, "AD").map_err(|e| e.to_string()),
                    rhat,
                    support_violations: violations,
                    n_draws: chains.iter().map(|c| c.n_draws()).sum(),
                }
            }
            Err(e) => ModelFit {
                label: m.label.clone(),
                summary: Err(e.to_string()),
                rhat: f64::NAN,
                support_violations: 0,
                n_draws: 0,
            },
        };
        fits.push(fit);
    }
    Ok(ReplicateResult {
        run_index,
        seed,
        tad: sc.tad(),
        fits,
        dropout,
    })
}

/// Performance of one model in one scenario.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StudyRow {
    pub model: String,
    pub sigma: f64,
    pub omega: f64,
    pub tad: f64,
    pub n_runs: usize,
    pub n_failed: usize,
    /// False when more than 1% of runs failed.
    pub valid: bool,
    pub bias: f64,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    /// Sample SD of the posterior means.
    pub se: f64,
    pub q025: f64,
    pub q975: f64,
    pub mse: f64,
    pub support_violations: usize,
    pub max_rhat: f64,
}

/// Averages run results in run-index order, one row per model.
pub fn aggregate(sc: &ScenarioConfig, models: &[StudyModel], runs: &[ReplicateResult]) -> Result<Vec<StudyRow>> {
    if runs.is_empty() {
        return Err(Error::Config("no runs to aggregate".to_string()));
    }
    let mut sorted: Vec<&ReplicateResult> = runs.iter().collect();
    sorted.sort_by_key(|r| r.run_index);
    let tad = sc.tad();
    let mut rows = Vec::with_capacity(models.len());
    for m in models {
        let mut ok: Vec<PosteriorSummary> = Vec::new();
        let mut failed = 0;
        let mut violations = 0;
        let mut max_rhat = f64::NEG_INFINITY;
        for r in &sorted {
            let fit = r
                .fits
                .iter()
                .find(|f| f.label == m.label)
                .ok_or_else(|| Error::Config(format!("run {} lacks model {}", r.run_index, m.label)))?;
            violations += fit.support_violations;
            if fit.rhat.is_finite() {
                max_rhat = max_rhat.max(fit.rhat);
            }
            match &fit.summary {
                Ok(s) => ok.push(*s),
                Err(_) => failed += 1,
            }
        }
        let n = ok.len() as f64;
        let avg = |f: fn(&PosteriorSummary) -> f64| ok.iter().map(f).sum::<f64>() / n;
        let mean = avg(|s| s.mean);
        let se = if ok.len() > 1 {
            math::sqrt(ok.iter().map(|s| (s.mean - mean) * (s.mean - mean)).sum::<f64>() / (n - 1.0))
        } else {
            f64::NAN
        };
        rows.push(StudyRow {
            model: m.label.clone(),
            sigma: sc.sigma,
            omega: sc.omega,
            tad,
            n_runs: ok.len(),
            n_failed: failed,
            valid: !ok.is_empty() && (failed as f64) <= 0.01 * sorted.len() as f64,
            bias: mean - tad,
            mean,
            median: avg(|s| s.median),
            sd: avg(|s| s.sd),
            se,
            q025: avg(|s| s.q025),
            q975: avg(|s| s.q975),
            mse: ok.iter().map(|s| (s.mean - tad) * (s.mean - tad)).sum::<f64>() / n,
            support_violations: violations,
            max_rhat: if max_rhat.is_finite() { max_rhat } else { f64::NAN },
        });
    }
    Ok(rows)
}

/// Runs `n_runs` replicates of every scenario, one after another.
pub fn run_study(
    scenarios: &[ScenarioConfig],
    models: &[StudyModel],
    n_runs: usize,
    mcmc: &McmcConfig,
    master_seed: u64,
) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::new();
    for sc in scenarios {
        let runs: Vec<ReplicateResult> = (0..n_runs)
            .map(|i| run_replicate(sc, models, mcmc, master_seed, i))
            .collect::<Result<_>>()?;
        rows.extend(aggregate(sc, models, &runs)?);
    }
    Ok(rows)
}
