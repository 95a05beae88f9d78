//! TOML configuration files for the three commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use magfold_core::dropout::TemporalKind;
use magfold_core::model::{ModelSpec, ModelVariant};
use magfold_core::outcome::OutcomePriorConfig;
use magfold_core::sampler::McmcConfig;
use magfold_core::simulation::{ScenarioConfig, StudyModel};

use crate::error::{AppError, AppResult};

/// Settings for `fit`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `A`, `B`, `C` or `D`.
    pub model: Option<String>,
    /// `linear`, `flexible` or `grouped:N`.
    pub temporal: Option<String>,
    pub seed: Option<u64>,
    pub n_times: Option<usize>,
    pub drop_baseline: bool,
    pub dropout_prior_sd: Option<f64>,
    pub prior: OutcomePriorConfig,
    pub mcmc: McmcConfig,
    pub output: Option<PathBuf>,
}

/// Settings for `simulate`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub output: Option<PathBuf>,
}

/// Which standard grid a study runs when no scenarios are listed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyDesign {
    /// Folded vs. linear on the 16 complete-data cells.
    #[default]
    Complete,
    /// Reference vs. joint models on the four dropout cells.
    Dropout,
}

/// Settings for `study`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub design: StudyDesign,
    pub n_runs: usize,
    pub seed: u64,
    /// Table labels (`F`, `L`, `I`, `II`, `III`) or model letters.
    pub models: Option<Vec<String>>,
    /// Hazard form of flexible joint models.
    pub temporal: Option<String>,
    pub prior: OutcomePriorConfig,
    pub mcmc: McmcConfig,
    /// Explicit scenarios; the design's grid when empty.
    #[serde(rename = "scenario")]
    pub scenarios: Vec<ScenarioConfig>,
    pub output: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            design: StudyDesign::Complete,
            n_runs: 100,
            seed: 1,
            models: None,
            temporal: None,
            prior: OutcomePriorConfig::default(),
            mcmc: McmcConfig::new(2, 1000, 1000, 1),
            scenarios: Vec::new(),
            output: None,
        }
    }
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> AppResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(format!("reading {}", path.display()), e))?;
    toml::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_temporal(text: &str) -> AppResult<TemporalKind> {
    let t = text.trim().to_ascii_lowercase();
    match t.as_str() {
        "linear" => Ok(TemporalKind::Linear),
        "flexible" => Ok(TemporalKind::Flexible),
        _ => {
            let size = t
                .strip_prefix("grouped:")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .ok_or_else(|| AppError::Config(format!("temporal kind `{text}`: expected linear, flexible or grouped:N")))?;
            Ok(TemporalKind::FlexibleGrouped { bucket_size: size })
        }
    }
}

pub fn format_temporal(kind: TemporalKind) -> String {
    match kind {
        TemporalKind::Linear => "linear".into(),
        TemporalKind::Flexible => "flexible".into(),
        TemporalKind::FlexibleGrouped { bucket_size } => format!("grouped:{bucket_size}"),
    }
}

pub fn parse_model_letter(text: &str) -> AppResult<ModelVariant> {
    let mut chars = text.trim().chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => ModelVariant::from_letter(c),
        _ => None,
    }
    .ok_or_else(|| AppError::Config(format!("model `{text}`: expected A, B, C or D")))
}

/// Model spec from a variant, an optional hazard form and priors. Model C
/// implies linear hazards and model D defaults to one coefficient per time.
pub fn build_spec(
    variant: ModelVariant,
    temporal: Option<TemporalKind>,
    n_times: usize,
    prior: OutcomePriorConfig,
    dropout_prior_sd: Option<f64>,
) -> AppResult<ModelSpec> {
    let temporal = match (variant, temporal) {
        (ModelVariant::LinearReference | ModelVariant::FoldedMixed, Some(_)) => {
            return Err(AppError::Config(format!(
                "model {} has no dropout submodel; drop the temporal setting",
                variant.letter()
            )))
        }
        (ModelVariant::LinearReference | ModelVariant::FoldedMixed, None) => None,
        (ModelVariant::JointLinear, None) => Some(TemporalKind::Linear),
        (ModelVariant::JointFlexible, None) => Some(TemporalKind::Flexible),
        (_, t) => t,
    };
    let mut spec = ModelSpec::new(variant, n_times, temporal).map_err(|e| AppError::Config(e.to_string()))?;
    spec.outcome_prior = prior;
    if let Some(sd) = dropout_prior_sd {
        spec.dropout_prior_sd = sd;
    }
    spec.validate().map_err(|e| AppError::Config(e.to_string()))?;
    Ok(spec)
}

/// Study model for a table label or model letter.
pub fn study_model(label: &str, flexible: TemporalKind, prior: OutcomePriorConfig) -> AppResult<StudyModel> {
    let (variant, temporal) = match label.trim() {
        "F" | "I" | "B" => (ModelVariant::FoldedMixed, None),
        "L" | "A" => (ModelVariant::LinearReference, None),
        "II" | "C" => (ModelVariant::JointLinear, Some(TemporalKind::Linear)),
        "III" | "D" => (ModelVariant::JointFlexible, Some(flexible)),
        other => return Err(AppError::Config(format!("unknown study model `{other}`"))),
    };
    let mut m = StudyModel::new(label.trim(), variant, temporal);
    m.prior = prior;
    Ok(m)
}

impl StudyConfig {
    pub fn resolved_models(&self) -> AppResult<Vec<StudyModel>> {
        let flexible = match &self.temporal {
            Some(t) => parse_temporal(t)?,
            None => TemporalKind::Flexible,
        };
        if matches!(flexible, TemporalKind::Linear) {
            return Err(AppError::Config("the flexible study model needs flexible or grouped:N".into()));
        }
        let labels: Vec<String> = match &self.models {
            Some(l) => l.clone(),
            None => match self.design {
                StudyDesign::Complete => vec!["F".into(), "L".into()],
                StudyDesign::Dropout => vec!["I".into(), "II".into(), "III".into()],
            },
        };
        if labels.is_empty() {
            return Err(AppError::Config("no study models".into()));
        }
        labels.iter().map(|l| study_model(l, flexible, self.prior)).collect()
    }

    pub fn resolved_scenarios(&self) -> AppResult<Vec<ScenarioConfig>> {
        let scenarios = if self.scenarios.is_empty() {
            match self.design {
                StudyDesign::Complete => ScenarioConfig::complete_data_grid(),
                StudyDesign::Dropout => ScenarioConfig::dropout_grid(),
            }
        } else {
            self.scenarios.clone()
        };
        for sc in &scenarios {
            sc.validate().map_err(|e| AppError::Scenario(e.to_string()))?;
        }
        Ok(scenarios)
    }
}
