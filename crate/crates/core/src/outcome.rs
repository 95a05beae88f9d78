//! Folded normal mixed-effects outcome model and its linear reference model.
//!
//! Each group follows a straight line over time; subjects deviate from their
//! group's line through a random intercept and a random slope. Under the
//! folded model the magnitudes are `FN(μ_it, σ²)` and the fixed effects carry
//! truncated normal priors on `[0, ∞)`, while each random-effect SD is uniform
//! on `(0, ω · paired fixed effect)`. That bounded support is what keeps the
//! trajectories away from the sign-flipped mode of the folded likelihood.

use alloc::format;

use crate::data::{ExposureGroup, SubjectData};
use crate::distributions::{folded_ln_pdf_unchecked, inverse_gamma_ln_pdf, normal_ln_pdf, TruncatedNormal};
use crate::error::structure;
use crate::math::{self, LN_2PI};
use crate::{Error, Result};

/// Group-specific intercepts and slopes plus the residual variance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedEffects {
    pub c0: f64,
    pub c1: f64,
    pub d0: f64,
    pub d1: f64,
    pub sigma2: f64,
}

impl FixedEffects {
    pub fn intercept(&self, g: ExposureGroup) -> f64 {
        match g {
            ExposureGroup::Unexposed => self.c0,
            ExposureGroup::Exposed => self.d0,
        }
    }

    pub fn slope(&self, g: ExposureGroup) -> f64 {
        match g {
            ExposureGroup::Unexposed => self.c1,
            ExposureGroup::Exposed => self.d1,
        }
    }

    /// `[c0, c1, d0, d1]`.
    pub fn lines(&self) -> [f64; 4] {
        [self.c0, self.c1, self.d0, self.d1]
    }

    pub fn with_lines(lines: [f64; 4], sigma2: f64) -> Self {
        Self {
            c0: lines[0],
            c1: lines[1],
            d0: lines[2],
            d1: lines[3],
            sigma2,
        }
    }
}

/// The random intercept and slope of one subject, tagged with the group they
/// belong to (`α` for unexposed, `β` for exposed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomEffects {
    pub group: ExposureGroup,
    pub intercept: f64,
    pub slope: f64,
}

impl RandomEffects {
    pub fn zero(group: ExposureGroup) -> Self {
        Self {
            group,
            intercept: 0.0,
            slope: 0.0,
        }
    }
}

/// Standard deviations of the four random-effect distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceComponents {
    pub tau_a0: f64,
    pub tau_a1: f64,
    pub tau_b0: f64,
    pub tau_b1: f64,
}

impl VarianceComponents {
    pub fn intercept_sd(&self, g: ExposureGroup) -> f64 {
        match g {
            ExposureGroup::Unexposed => self.tau_a0,
            ExposureGroup::Exposed => self.tau_b0,
        }
    }

    pub fn slope_sd(&self, g: ExposureGroup) -> f64 {
        match g {
            ExposureGroup::Unexposed => self.tau_a1,
            ExposureGroup::Exposed => self.tau_b1,
        }
    }

    /// `[τ_a0, τ_a1, τ_b0, τ_b1]`, aligned with [`FixedEffects::lines`].
    pub fn as_array(&self) -> [f64; 4] {
        [self.tau_a0, self.tau_a1, self.tau_b0, self.tau_b1]
    }

    pub fn from_array(t: [f64; 4]) -> Self {
        Self {
            tau_a0: t[0],
            tau_a1: t[1],
            tau_b0: t[2],
            tau_b1: t[3],
        }
    }
}

/// Prior hyperparameters for the outcome model.
///
/// `zeta`/`rho2` are indexed like [`FixedEffects::lines`] so each line
/// coefficient may get its own prior; the defaults are shared.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct OutcomePriorConfig {
    pub zeta: [f64; 4],
    pub rho2: [f64; 4],
    /// Ratio bounding each random-effect SD by its paired fixed effect.
    pub omega: f64,
    pub sigma2_shape: f64,
    pub sigma2_scale: f64,
    /// Upper end of the uniform prior on random-effect SDs in the linear
    /// reference model.
    pub reference_tau_upper: f64,
}

impl Default for OutcomePriorConfig {
    fn default() -> Self {
        Self {
            zeta: [0.0; 4],
            rho2: [100.0; 4],
            omega: 0.5,
            sigma2_shape: 0.01,
            sigma2_scale: 0.01,
            reference_tau_upper: 10.0,
        }
    }
}

impl OutcomePriorConfig {
    pub fn validate(&self) -> Result<()> {
        for (&z, &r) in self.zeta.iter().zip(&self.rho2) {
            if !z.is_finite() {
                return Err(Error::Parameter { what: "zeta", value: z });
            }
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Parameter { what: "rho2", value: r });
            }
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Parameter {
                what: "omega",
                value: self.omega,
            });
        }
        for (what, v) in [
            ("sigma2_shape", self.sigma2_shape),
            ("sigma2_scale", self.sigma2_scale),
            ("reference_tau_upper", self.reference_tau_upper),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter { what, value: v });
            }
        }
        Ok(())
    }
}

fn check_group(re: &RandomEffects, g: ExposureGroup) -> Result<()> {
    if re.group == g {
        Ok(())
    } else {
        Err(structure(format!(
            "random effects belong to group {:?} but subject is {:?}",
            re.group, g
        )))
    }
}

/// `μ_it` for a subject in group `g` at time `t`.
pub fn expected_trajectory(fe: &FixedEffects, re: &RandomEffects, g: ExposureGroup, t: usize) -> Result<f64> {
    check_group(re, g)?;
    let t = t as f64;
    Ok(fe.intercept(g) + re.intercept + (fe.slope(g) + re.slope) * t)
}

/// Summed folded normal log-density over `z`, observed at `t = 0, 1, …`,
/// for the line `intercept + slope · t`.
#[inline]
pub(crate) fn folded_line_ll(z: &[f64], intercept: f64, slope: f64, sigma: f64) -> f64 {
    let inv_s2 = 1.0 / (sigma * sigma);
    let mut acc = 0.0;
    for (t, &zt) in z.iter().enumerate() {
        let m = (intercept + slope * t as f64).abs();
        let d = zt - m;
        acc += -0.5 * d * d * inv_s2 + math::ln_1p_exp_neg(2.0 * zt * m * inv_s2);
    }
    acc - z.len() as f64 * (math::ln(sigma) + 0.5 * LN_2PI)
}

#[inline]
pub(crate) fn normal_line_ll(z: &[f64], intercept: f64, slope: f64, sigma: f64) -> f64 {
    let inv_s2 = 1.0 / (sigma * sigma);
    let mut acc = 0.0;
    for (t, &zt) in z.iter().enumerate() {
        let d = zt - (intercept + slope * t as f64);
        acc += d * d;
    }
    -0.5 * acc * inv_s2 - z.len() as f64 * (math::ln(sigma) + 0.5 * LN_2PI)
}

fn check_subject(s: &SubjectData, fe: &FixedEffects, re: &RandomEffects) -> Result<f64> {
    check_group(re, s.group)?;
    if s.observations.is_empty() {
        return Err(structure(format!("subject {} has no observed response", s.id)));
    }
    if !(fe.sigma2 > 0.0) || !fe.sigma2.is_finite() {
        return Err(Error::Parameter {
            what: "sigma2",
            value: fe.sigma2,
        });
    }
    Ok(math::sqrt(fe.sigma2))
}

/// Folded normal log-likelihood of a subject's observed magnitudes.
pub fn outcome_log_likelihood(s: &SubjectData, fe: &FixedEffects, re: &RandomEffects) -> Result<f64> {
    let sigma = check_subject(s, fe, re)?;
    let mut acc = 0.0;
    for obs in &s.observations {
        if !(obs.z >= 0.0) {
            return Err(Error::Domain { what: "z", value: obs.z });
        }
        let mu = expected_trajectory(fe, re, s.group, obs.time)?;
        acc += folded_ln_pdf_unchecked(obs.z, mu, sigma);
    }
    Ok(acc)
}

/// Normal log-likelihood of the magnitudes around the same linear predictor.
pub fn linear_reference_log_likelihood(s: &SubjectData, fe: &FixedEffects, re: &RandomEffects) -> Result<f64> {
    let sigma = check_subject(s, fe, re)?;
    let mut acc = 0.0;
    for obs in &s.observations {
        let mu = expected_trajectory(fe, re, s.group, obs.time)?;
        acc += normal_ln_pdf(obs.z, mu, sigma);
    }
    Ok(acc)
}

/// Centered normal log-densities of a subject's random intercept and slope.
pub fn random_effects_log_prior(re: &RandomEffects, vc: &VarianceComponents, g: ExposureGroup) -> Result<f64> {
    check_group(re, g)?;
    let (ti, ts) = (vc.intercept_sd(g), vc.slope_sd(g));
    for (what, v) in [("tau_intercept", ti), ("tau_slope", ts)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Parameter { what, value: v });
        }
    }
    Ok(normal_ln_pdf(re.intercept, 0.0, ti) + normal_ln_pdf(re.slope, 0.0, ts))
}

/// Truncated normal priors on the four line coefficients and the inverse
/// gamma prior on `σ²`; `-∞` outside the support.
pub fn fixed_effects_log_prior(fe: &FixedEffects, cfg: &OutcomePriorConfig) -> f64 {
    let mut acc = inverse_gamma_ln_pdf(fe.sigma2, cfg.sigma2_shape, cfg.sigma2_scale);
    for (k, &v) in fe.lines().iter().enumerate() {
        match TruncatedNormal::new(cfg.zeta[k], cfg.rho2[k], 0.0) {
            Ok(tn) => acc += tn.ln_pdf(v),
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    acc
}

/// Untruncated normal priors used by the linear reference model.
pub fn reference_fixed_effects_log_prior(fe: &FixedEffects, cfg: &OutcomePriorConfig) -> f64 {
    let mut acc = inverse_gamma_ln_pdf(fe.sigma2, cfg.sigma2_shape, cfg.sigma2_scale);
    for (k, &v) in fe.lines().iter().enumerate() {
        acc += normal_ln_pdf(v, cfg.zeta[k], math::sqrt(cfg.rho2[k]));
    }
    acc
}

/// Uniform `(0, ω · fixed effect)` priors on the random-effect SDs.
pub fn tau_log_prior(vc: &VarianceComponents, fe: &FixedEffects, cfg: &OutcomePriorConfig) -> f64 {
    let mut acc = 0.0;
    for (tau, line) in vc.as_array().into_iter().zip(fe.lines()) {
        let bound = line * cfg.omega;
        if !(bound > 0.0) || !(tau > 0.0 && tau < bound) {
            return f64::NEG_INFINITY;
        }
        acc -= math::ln(bound);
    }
    acc
}

/// Uniform `(0, reference_tau_upper)` priors of the linear reference model.
pub fn reference_tau_log_prior(vc: &VarianceComponents, cfg: &OutcomePriorConfig) -> f64 {
    let upper = cfg.reference_tau_upper;
    if vc.as_array().iter().all(|&t| t > 0.0 && t < upper) {
        -4.0 * math::ln(upper)
    } else {
        f64::NEG_INFINITY
    }
}

/// Mean vertical gap between the two group lines over `t = 0, …, K-1`:
/// `c0 - d0 + (c1 - d1)(K-1)/2`.
pub fn average_distance(fe: &FixedEffects, n_times: usize) -> f64 {
    fe.c0 - fe.d0 + (fe.c1 - fe.d1) * (n_times as f64 - 1.0) / 2.0
}
