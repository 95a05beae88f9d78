//! Model variants, parameter states and the full log-posterior.

use alloc::format;
use alloc::vec::Vec;

use crate::data::LongitudinalDataset;
use crate::dropout::{dropout_log_likelihood, dropout_log_prior, DropoutParams, TemporalKind};
use crate::error::structure;
use crate::outcome::{
    fixed_effects_log_prior, linear_reference_log_likelihood, outcome_log_likelihood, random_effects_log_prior,
    reference_fixed_effects_log_prior, reference_tau_log_prior, tau_log_prior, FixedEffects, OutcomePriorConfig,
    RandomEffects, VarianceComponents,
};
use crate::{Error, Result};

/// The four fitted models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ModelVariant {
    /// Normal linear mixed model on the magnitudes (model A / L).
    LinearReference,
    /// Folded normal mixed model, dropout ignored (model B / F / I).
    FoldedMixed,
    /// Folded model joint with linear temporal hazards (model C / II).
    JointLinear,
    /// Folded model joint with flexible, optionally bucketed, hazards (model D / III).
    JointFlexible,
}

impl ModelVariant {
    pub fn letter(self) -> char {
        match self {
            ModelVariant::LinearReference => 'A',
            ModelVariant::FoldedMixed => 'B',
            ModelVariant::JointLinear => 'C',
            ModelVariant::JointFlexible => 'D',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(ModelVariant::LinearReference),
            'B' => Some(ModelVariant::FoldedMixed),
            'C' => Some(ModelVariant::JointLinear),
            'D' => Some(ModelVariant::JointFlexible),
            _ => None,
        }
    }

    pub fn is_joint(self) -> bool {
        matches!(self, ModelVariant::JointLinear | ModelVariant::JointFlexible)
    }

    pub fn is_folded(self) -> bool {
        self != ModelVariant::LinearReference
    }
}

/// A fully specified model: variant, grid size, priors and hazard form.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSpec {
    pub variant: ModelVariant,
    pub n_times: usize,
    pub outcome_prior: OutcomePriorConfig,
    /// SD of the normal priors on dropout coefficients (logit scale).
    pub dropout_prior_sd: f64,
    /// Present exactly for the joint variants.
    pub temporal: Option<TemporalKind>,
    /// When false the data terms are dropped and the posterior is the prior.
    pub likelihood: bool,
}

impl ModelSpec {
    pub fn new(variant: ModelVariant, n_times: usize, temporal: Option<TemporalKind>) -> Result<Self> {
        let spec = Self {
            variant,
            n_times,
            outcome_prior: OutcomePriorConfig::default(),
            dropout_prior_sd: 10.0,
            temporal,
            likelihood: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn linear_reference(n_times: usize) -> Self {
        Self::new(ModelVariant::LinearReference, n_times, None).expect("valid reference spec")
    }

    pub fn folded(n_times: usize) -> Self {
        Self::new(ModelVariant::FoldedMixed, n_times, None).expect("valid folded spec")
    }

    pub fn joint_linear(n_times: usize) -> Self {
        Self::new(ModelVariant::JointLinear, n_times, Some(TemporalKind::Linear)).expect("valid joint spec")
    }

    pub fn joint_flexible(n_times: usize, kind: TemporalKind) -> Result<Self> {
        Self::new(ModelVariant::JointFlexible, n_times, Some(kind))
    }

    pub fn with_outcome_prior(mut self, prior: OutcomePriorConfig) -> Self {
        self.outcome_prior = prior;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_times < 2 {
            return Err(Error::Config(format!("K must be at least 2, got {}", self.n_times)));
        }
        self.outcome_prior.validate()?;
        if !(self.dropout_prior_sd > 0.0) || !self.dropout_prior_sd.is_finite() {
            return Err(Error::Parameter {
                what: "dropout_prior_sd",
                value: self.dropout_prior_sd,
            });
        }
        match (self.variant, self.temporal) {
            (ModelVariant::LinearReference | ModelVariant::FoldedMixed, None) => Ok(()),
            (ModelVariant::JointLinear, Some(TemporalKind::Linear)) => Ok(()),
            (ModelVariant::JointFlexible, Some(TemporalKind::Flexible)) => Ok(()),
            (ModelVariant::JointFlexible, Some(TemporalKind::FlexibleGrouped { bucket_size })) if bucket_size >= 1 => {
                Ok(())
            }
            (v, t) => Err(Error::Config(format!("temporal kind {t:?} does not fit model {v:?}"))),
        }
    }
}

/// One point in parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterState {
    pub fixed: FixedEffects,
    pub variances: VarianceComponents,
    /// One entry per subject, in dataset order.
    pub random: Vec<RandomEffects>,
    pub dropout: Option<DropoutParams>,
}

impl ParameterState {
    pub fn check_dimensions(&self, data: &LongitudinalDataset, spec: &ModelSpec) -> Result<()> {
        if spec.n_times != data.n_times() {
            return Err(structure(format!(
                "model built for K = {}, data has K = {}",
                spec.n_times,
                data.n_times()
            )));
        }
        if self.random.len() != data.len() {
            return Err(structure(format!(
                "{} random-effect pairs for {} subjects",
                self.random.len(),
                data.len()
            )));
        }
        for (re, s) in self.random.iter().zip(data.subjects()) {
            if re.group != s.group {
                return Err(structure(format!("random effects of subject {} carry the wrong group", s.id)));
            }
        }
        match (&self.dropout, spec.temporal) {
            (None, None) => Ok(()),
            (Some(dp), Some(kind)) if dp.kind() == kind && dp.n_times() == spec.n_times => Ok(()),
            _ => Err(structure("dropout parameters do not match the model variant")),
        }
    }
}

/// Log prior of everything except the random effects; `-∞` off-support.
pub(crate) fn hyper_log_prior(state: &ParameterState, spec: &ModelSpec) -> f64 {
    let cfg = &spec.outcome_prior;
    let mut lp = if spec.variant.is_folded() {
        fixed_effects_log_prior(&state.fixed, cfg) + tau_log_prior(&state.variances, &state.fixed, cfg)
    } else {
        reference_fixed_effects_log_prior(&state.fixed, cfg) + reference_tau_log_prior(&state.variances, cfg)
    };
    if let Some(dp) = &state.dropout {
        lp += dropout_log_prior(dp, spec.dropout_prior_sd);
    }
    lp
}

/// Unnormalized log-posterior: per-subject random-effect priors, outcome
/// likelihoods and (joint variants) dropout likelihoods, plus the priors on
/// fixed effects, SDs, `σ²` and dropout coefficients.
pub fn log_posterior(state: &ParameterState, data: &LongitudinalDataset, spec: &ModelSpec) -> Result<f64> {
    state.check_dimensions(data, spec)?;
    let hyper = hyper_log_prior(state, spec);
    if hyper == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let mut lp = hyper;
    for (s, re) in data.subjects().iter().zip(&state.random) {
        lp += random_effects_log_prior(re, &state.variances, s.group)?;
        if !spec.likelihood {
            continue;
        }
        lp += if spec.variant.is_folded() {
            outcome_log_likelihood(s, &state.fixed, re)?
        } else {
            linear_reference_log_likelihood(s, &state.fixed, re)?
        };
        if let Some(dp) = &state.dropout {
            lp += dropout_log_likelihood(&s.dropout, dp, re, s.group, data.n_times())?;
        }
    }
    Ok(lp)
}
