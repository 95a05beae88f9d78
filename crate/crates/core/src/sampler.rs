//! Adaptive Metropolis-within-Gibbs sampler.
//!
//! Every parameter is updated by a scalar random-walk Metropolis step on a
//! transformed scale:
//!
//! * line coefficients on the identity scale, with proposals outside the
//!   support rejected. Each coefficient gets two moves per sweep, a plain
//!   move holding the random effects fixed and a shift move that moves the
//!   coefficient and the matching random effects of its group in opposite
//!   directions, leaving every subject-level line unchanged;
//! * `σ²` on the log scale;
//! * each random-effect SD on the logit scale of its current support, once
//!   on its own and once jointly with its group's random effects, which are
//!   rescaled by the same factor;
//! * each subject's random intercept and slope, then each dropout
//!   coefficient, on the identity scale.
//!
//! Proposal scales are tuned in batches during burn-in toward a target
//! acceptance rate and frozen afterwards.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::data::LongitudinalDataset;
use crate::distributions::{inverse_gamma_ln_pdf, normal_sample};
use crate::dropout::{dropout_log_prior, profile_log_likelihood, DropoutParams};
use crate::math;
use crate::model::{log_posterior, ModelSpec, ParameterState};
use crate::outcome::{
    average_distance, folded_line_ll, normal_line_ll, FixedEffects, RandomEffects, VarianceComponents,
};
use crate::rng::{derive_seed, label_id, SimRng};
use crate::{Error, Result};
use rand::SeedableRng;

/// Names of the outcome-model quantities, in output order.
pub const OUTCOME_QUANTITIES: [&str; 10] = [
    "c0", "c1", "d0", "d1", "sigma2", "tau_a0", "tau_a1", "tau_b0", "tau_b1", "AD",
];

const TAU_NAMES: [&str; 4] = ["tau_a0", "tau_a1", "tau_b0", "tau_b1"];

/// Burn-in tuning of proposal scales.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AdaptationConfig {
    pub target_accept: f64,
    /// Sweeps per adaptation batch.
    pub batch_size: usize,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        Self {
            target_accept: 0.44,
            batch_size: 25,
        }
    }
}

/// Parameter blocks held at their initial values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FrozenParameters {
    /// `c0, c1, d0, d1`.
    pub lines: [bool; 4],
    pub sigma2: bool,
    /// `τ_a0, τ_a1, τ_b0, τ_b1`.
    pub taus: [bool; 4],
    pub random_effects: bool,
    pub dropout: bool,
}

impl FrozenParameters {
    pub fn any(&self) -> bool {
        self.lines.iter().chain(&self.taus).any(|&b| b) || self.sigma2 || self.random_effects || self.dropout
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct McmcConfig {
    pub n_chains: usize,
    pub burn_in: usize,
    /// Retained draws per chain.
    pub n_samples: usize,
    pub seed: u64,
    pub adaptation: AdaptationConfig,
    /// Keep per-iteration random effects in the output.
    pub retain_random_effects: bool,
    pub max_init_attempts: usize,
    pub frozen: FrozenParameters,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_chains: 4,
            burn_in: 2000,
            n_samples: 2000,
            seed: 1,
            adaptation: AdaptationConfig::default(),
            retain_random_effects: false,
            max_init_attempts: 20,
            frozen: FrozenParameters::default(),
        }
    }
}

impl McmcConfig {
    pub fn new(n_chains: usize, burn_in: usize, n_samples: usize, seed: u64) -> Self {
        Self {
            n_chains,
            burn_in,
            n_samples,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::Config("n_chains must be at least 1".to_string()));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".to_string()));
        }
        if self.adaptation.batch_size == 0 {
            return Err(Error::Config("adaptation batch_size must be at least 1".to_string()));
        }
        let t = self.adaptation.target_accept;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config(format!("target acceptance {t} outside (0, 1)")));
        }
        if self.max_init_attempts == 0 {
            return Err(Error::Config("max_init_attempts must be at least 1".to_string()));
        }
        Ok(())
    }

    /// Seed of chain `chain_index`.
    pub fn chain_seed(&self, chain_index: usize) -> u64 {
        derive_seed(self.seed, &[label_id("chain"), chain_index as u64])
    }
}

/// Post-burn-in acceptance of one update block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAcceptance {
    pub block: String,
    pub rate: f64,
    /// Proposal SD on the block's transformed scale at the end of burn-in
    /// (mean over members for per-subject blocks).
    pub scale: f64,
}

/// Retained draws of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub chain_index: usize,
    pub seed: u64,
    pub init_attempts: usize,
    pub names: Vec<String>,
    /// `draws[q][s]` is quantity `names[q]` at retained iteration `s`.
    pub draws: Vec<Vec<f64>>,
    pub log_posterior: Vec<f64>,
    pub acceptance: Vec<BlockAcceptance>,
    /// `[iteration][subject] = [intercept, slope]` when retained.
    pub random_effects: Option<Vec<Vec<[f64; 2]>>>,
    pub final_state: ParameterState,
}

impl ChainOutput {
    pub fn n_draws(&self) -> usize {
        self.log_posterior.len()
    }

    pub fn quantity(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|q| self.draws[q].as_slice())
    }
}

#[derive(Debug, Clone)]
struct Proposal {
    log_scale: f64,
    batch_accepts: u32,
    batch_tries: u32,
    batches: u32,
    accepts: u64,
    tries: u64,
}

impl Proposal {
    fn new(scale: f64) -> Self {
        Self {
            log_scale: math::ln(scale),
            batch_accepts: 0,
            batch_tries: 0,
            batches: 0,
            accepts: 0,
            tries: 0,
        }
    }

    #[inline]
    fn scale(&self) -> f64 {
        math::exp(self.log_scale)
    }

    #[inline]
    fn record(&mut self, accepted: bool, adapting: bool) {
        if adapting {
            self.batch_tries += 1;
            self.batch_accepts += accepted as u32;
        } else {
            self.tries += 1;
            self.accepts += accepted as u64;
        }
    }

    fn adapt(&mut self, target: f64) {
        if self.batch_tries == 0 {
            return;
        }
        self.batches += 1;
        let rate = self.batch_accepts as f64 / self.batch_tries as f64;
        let step = (3.0 / math::sqrt(self.batches as f64)).min(1.5);
        self.log_scale = (self.log_scale + step * (rate - target)).clamp(-40.0, 5.0);
        self.batch_accepts = 0;
        self.batch_tries = 0;
    }

    fn rate(&self) -> f64 {
        if self.tries == 0 {
            f64::NAN
        } else {
            self.accepts as f64 / self.tries as f64
        }
    }
}

fn pooled_acceptance(block: &str, props: &[Proposal]) -> BlockAcceptance {
    let tries: u64 = props.iter().map(|p| p.tries).sum();
    let accepts: u64 = props.iter().map(|p| p.accepts).sum();
    let scale = if props.is_empty() {
        f64::NAN
    } else {
        props.iter().map(Proposal::scale).sum::<f64>() / props.len() as f64
    };
    BlockAcceptance {
        block: block.to_string(),
        rate: if tries == 0 { f64::NAN } else { accepts as f64 / tries as f64 },
        scale,
    }
}

#[inline]
fn accept(rng: &mut SimRng, log_ratio: f64) -> bool {
    let u: f64 = rng.random();
    // NaN log ratios compare false and are rejected
    math::ln(u) < log_ratio
}

#[inline]
fn std_normal(rng: &mut SimRng) -> f64 {
    normal_sample(rng, 0.0, 1.0)
}

struct Gibbs<'a> {
    spec: &'a ModelSpec,
    folded: bool,
    likelihood: bool,
    n_times: usize,
    z: Vec<Vec<f64>>,
    group: Vec<usize>,
    last: Vec<usize>,
    cause: Vec<u8>,
    members: [Vec<usize>; 2],

    lines: [f64; 4],
    sigma2: f64,
    tau: [f64; 4],
    re: Vec<[f64; 2]>,
    dp: Option<DropoutParams>,

    ll_out: Vec<f64>,
    ll_drop: Vec<f64>,
    /// `profiles[cause][group]`: temporal term at each hazard time.
    profiles: [[Vec<f64>; 2]; 2],
    scratch: Vec<f64>,
    scratch_drop: Vec<f64>,

    p_line: [Proposal; 4],
    p_shift: [Proposal; 4],
    p_sigma2: Proposal,
    p_tau: [Proposal; 4],
    p_tau_scale: [Proposal; 4],
    p_re: Vec<[Proposal; 2]>,
    p_dropout: Vec<Proposal>,
}

impl<'a> Gibbs<'a> {
    fn new(data: &LongitudinalDataset, spec: &'a ModelSpec, state: &ParameterState) -> Self {
        let n = data.len();
        let subjects = data.subjects();
        let lines = state.fixed.lines();
        let tau = state.variances.as_array();
        let k1 = data.n_times() - 1;
        let mut g = Self {
            spec,
            folded: spec.variant.is_folded(),
            likelihood: spec.likelihood,
            n_times: data.n_times(),
            z: subjects.iter().map(|s| s.magnitudes().collect()).collect(),
            group: subjects.iter().map(|s| s.group.index()).collect(),
            last: subjects.iter().map(|s| s.dropout.last_time).collect(),
            cause: subjects.iter().map(|s| s.dropout.cause.code()).collect(),
            members: data.group_indices(),
            lines,
            sigma2: state.fixed.sigma2,
            tau,
            re: state.random.iter().map(|r| [r.intercept, r.slope]).collect(),
            dp: state.dropout.clone(),
            ll_out: vec![0.0; n],
            ll_drop: vec![0.0; n],
            profiles: [[vec![0.0; k1], vec![0.0; k1]], [vec![0.0; k1], vec![0.0; k1]]],
            scratch: Vec::with_capacity(n),
            scratch_drop: Vec::with_capacity(n),
            p_line: lines.map(|v| Proposal::new(0.1 * v.abs().max(0.01))),
            p_shift: lines.map(|v| Proposal::new(0.1 * v.abs().max(0.01))),
            p_sigma2: Proposal::new(0.1),
            p_tau: [0; 4].map(|_| Proposal::new(0.5)),
            p_tau_scale: [0; 4].map(|_| Proposal::new(0.2)),
            p_re: Vec::new(),
            p_dropout: Vec::new(),
        };
        g.p_re = g
            .group
            .iter()
            .map(|&gi| [Proposal::new(0.5 * tau[2 * gi]), Proposal::new(0.5 * tau[2 * gi + 1])])
            .collect();
        if let Some(dp) = &g.dp {
            g.p_dropout = dp.coefficients().iter().map(|_| Proposal::new(0.3)).collect();
        }
        g.refresh_profiles();
        g.refresh_caches();
        g
    }

    fn refresh_profiles(&mut self) {
        if let Some(dp) = &self.dp {
            for c in 0..2 {
                for gi in 0..2 {
                    dp.fill_profile(c, crate::data::ExposureGroup::BOTH[gi], &mut self.profiles[c][gi]);
                }
            }
        }
    }

    fn refresh_caches(&mut self) {
        let sigma = math::sqrt(self.sigma2);
        for i in 0..self.z.len() {
            self.ll_out[i] = if self.likelihood { self.out_ll(i, self.re[i], &self.lines, sigma) } else { 0.0 };
            self.ll_drop[i] = if self.likelihood && self.dp.is_some() { self.drop_ll(i, self.re[i]) } else { 0.0 };
        }
    }

    #[inline]
    fn out_ll(&self, i: usize, r: [f64; 2], lines: &[f64; 4], sigma: f64) -> f64 {
        let g = self.group[i];
        let (b0, b1) = (lines[2 * g] + r[0], lines[2 * g + 1] + r[1]);
        if self.folded {
            folded_line_ll(&self.z[i], b0, b1, sigma)
        } else {
            normal_line_ll(&self.z[i], b0, b1, sigma)
        }
    }

    #[inline]
    fn drop_ll(&self, i: usize, r: [f64; 2]) -> f64 {
        let dp = self.dp.as_ref().expect("joint model");
        let g = self.group[i];
        let gg = crate::data::ExposureGroup::BOTH[g];
        let coefs = dp.coefficients();
        let mut shifts = [0.0; 2];
        for (c, shift) in shifts.iter_mut().enumerate() {
            let end = dp.block_start(c, gg) + dp.block_len();
            *shift = coefs[end - 2] * r[0] + coefs[end - 1] * r[1];
        }
        profile_log_likelihood(
            [&self.profiles[0][g], &self.profiles[1][g]],
            shifts,
            self.last[i],
            self.cause[i],
        )
    }

    fn line_prior_delta(&self, k: usize, old: f64, new: f64) -> f64 {
        let cfg = &self.spec.outcome_prior;
        let (m, v) = (cfg.zeta[k], cfg.rho2[k]);
        ((old - m) * (old - m) - (new - m) * (new - m)) / (2.0 * v)
    }

    /// Support check and log prior change from moving line `k` to `new`,
    /// including the change in the uniform density of its paired SD.
    fn line_support_delta(&self, k: usize, old: f64, new: f64) -> Option<f64> {
        let mut d = self.line_prior_delta(k, old, new);
        if self.folded {
            if !(new > 0.0) || !(self.tau[k] < new * self.spec.outcome_prior.omega) {
                return None;
            }
            d += math::ln(old / new);
        }
        Some(d)
    }

    fn line_move(&mut self, k: usize, rng: &mut SimRng, adapting: bool) {
        let g = k / 2;
        let old = self.lines[k];
        let new = old + self.p_line[k].scale() * std_normal(rng);
        let Some(mut d) = self.line_support_delta(k, old, new) else {
            self.p_line[k].record(false, adapting);
            return;
        };
        let mut scratch = core::mem::take(&mut self.scratch);
        scratch.clear();
        if self.likelihood {
            let mut lines = self.lines;
            lines[k] = new;
            let sigma = math::sqrt(self.sigma2);
            for &i in &self.members[g] {
                let l = self.out_ll(i, self.re[i], &lines, sigma);
                d += l - self.ll_out[i];
                scratch.push(l);
            }
        }
        let ok = accept(rng, d);
        if ok {
            self.lines[k] = new;
            for (&i, &l) in self.members[g].iter().zip(&scratch) {
                self.ll_out[i] = l;
            }
        }
        self.scratch = scratch;
        self.p_line[k].record(ok, adapting);
    }

    fn shift_move(&mut self, k: usize, rng: &mut SimRng, adapting: bool) {
        let (g, j) = (k / 2, k % 2);
        let old = self.lines[k];
        let eps = self.p_shift[k].scale() * std_normal(rng);
        let new = old + eps;
        let Some(mut d) = self.line_support_delta(k, old, new) else {
            self.p_shift[k].record(false, adapting);
            return;
        };
        let sum_r: f64 = self.members[g].iter().map(|&i| self.re[i][j]).sum();
        let n = self.members[g].len() as f64;
        let t2 = self.tau[k] * self.tau[k];
        d += (2.0 * eps * sum_r - n * eps * eps) / (2.0 * t2);
        let mut scratch = core::mem::take(&mut self.scratch);
        scratch.clear();
        let joint = self.likelihood && self.dp.is_some();
        if joint {
            for &i in &self.members[g] {
                let mut r = self.re[i];
                r[j] -= eps;
                let l = self.drop_ll(i, r);
                d += l - self.ll_drop[i];
                scratch.push(l);
            }
        }
        let ok = accept(rng, d);
        if ok {
            self.lines[k] = new;
            for &i in &self.members[g] {
                self.re[i][j] -= eps;
            }
            if joint {
                for (&i, &l) in self.members[g].iter().zip(&scratch) {
                    self.ll_drop[i] = l;
                }
            }
        }
        self.scratch = scratch;
        self.p_shift[k].record(ok, adapting);
    }

    fn sigma2_move(&mut self, rng: &mut SimRng, adapting: bool) {
        let cfg = &self.spec.outcome_prior;
        let old = self.sigma2;
        let step = self.p_sigma2.scale() * std_normal(rng);
        let new = old * math::exp(step);
        let mut d = inverse_gamma_ln_pdf(new, cfg.sigma2_shape, cfg.sigma2_scale)
            - inverse_gamma_ln_pdf(old, cfg.sigma2_shape, cfg.sigma2_scale)
            + step;
        let mut scratch = core::mem::take(&mut self.scratch);
        scratch.clear();
        if self.likelihood && d.is_finite() {
            let sigma = math::sqrt(new);
            for i in 0..self.z.len() {
                let l = self.out_ll(i, self.re[i], &self.lines, sigma);
                d += l - self.ll_out[i];
                scratch.push(l);
            }
        }
        let ok = accept(rng, d);
        if ok {
            self.sigma2 = new;
            if self.likelihood {
                self.ll_out.copy_from_slice(&scratch);
            }
        }
        self.scratch = scratch;
        self.p_sigma2.record(ok, adapting);
    }

    fn tau_bound(&self, k: usize) -> f64 {
        if self.folded {
            self.lines[k] * self.spec.outcome_prior.omega
        } else {
            self.spec.outcome_prior.reference_tau_upper
        }
    }

    fn tau_move(&mut self, k: usize, rng: &mut SimRng, adapting: bool) {
        let (g, j) = (k / 2, k % 2);
        let bound = self.tau_bound(k);
        let old = self.tau[k];
        let y = math::logit(old / bound);
        let y_new = y + self.p_tau[k].scale() * std_normal(rng);
        let u_new = math::sigmoid(y_new);
        let new = bound * u_new;
        if !(new > 0.0 && new < bound) {
            self.p_tau[k].record(false, adapting);
            return;
        }
        let jac = |y: f64| math::ln_sigmoid(y) + math::ln_sigmoid(-y);
        let n = self.members[g].len() as f64;
        let s2: f64 = self.members[g].iter().map(|&i| self.re[i][j] * self.re[i][j]).sum();
        let d = jac(y_new) - jac(y) - n * math::ln(new / old) - 0.5 * s2 * (1.0 / (new * new) - 1.0 / (old * old));
        let ok = accept(rng, d);
        if ok {
            self.tau[k] = new;
        }
        self.p_tau[k].record(ok, adapting);
    }

    /// Moves `τ_k` and rescales the matching random effects of its group by
    /// the same factor, keeping their standardized values fixed.
    fn tau_scale_move(&mut self, k: usize, rng: &mut SimRng, adapting: bool) {
        let (g, j) = (k / 2, k % 2);
        let bound = self.tau_bound(k);
        let old = self.tau[k];
        let y = math::logit(old / bound);
        let y_new = y + self.p_tau_scale[k].scale() * std_normal(rng);
        let new = bound * math::sigmoid(y_new);
        if !(new > 0.0 && new < bound) {
            self.p_tau_scale[k].record(false, adapting);
            return;
        }
        let f = new / old;
        let jac = |y: f64| math::ln_sigmoid(y) + math::ln_sigmoid(-y);
        let mut d = jac(y_new) - jac(y);
        let mut out = core::mem::take(&mut self.scratch);
        let mut drop = core::mem::take(&mut self.scratch_drop);
        out.clear();
        drop.clear();
        if self.likelihood {
            let sigma = math::sqrt(self.sigma2);
            for &i in &self.members[g] {
                let mut r = self.re[i];
                r[j] *= f;
                let l = self.out_ll(i, r, &self.lines, sigma);
                d += l - self.ll_out[i];
                out.push(l);
                if self.dp.is_some() {
                    let l = self.drop_ll(i, r);
                    d += l - self.ll_drop[i];
                    drop.push(l);
                }
            }
        }
        let ok = accept(rng, d);
        if ok {
            self.tau[k] = new;
            for &i in &self.members[g] {
                self.re[i][j] *= f;
            }
            for (&i, &l) in self.members[g].iter().zip(&out) {
                self.ll_out[i] = l;
            }
            for (&i, &l) in self.members[g].iter().zip(&drop) {
                self.ll_drop[i] = l;
            }
        }
        self.scratch = out;
        self.scratch_drop = drop;
        self.p_tau_scale[k].record(ok, adapting);
    }

    fn re_move(&mut self, i: usize, j: usize, rng: &mut SimRng, adapting: bool) {
        let g = self.group[i];
        let old = self.re[i];
        let mut new = old;
        new[j] += self.p_re[i][j].scale() * std_normal(rng);
        let t2 = self.tau[2 * g + j] * self.tau[2 * g + j];
        let mut d = (old[j] * old[j] - new[j] * new[j]) / (2.0 * t2);
        let (mut lo, mut ld) = (0.0, 0.0);
        if self.likelihood {
            lo = self.out_ll(i, new, &self.lines, math::sqrt(self.sigma2));
            d += lo - self.ll_out[i];
            if self.dp.is_some() {
                ld = self.drop_ll(i, new);
                d += ld - self.ll_drop[i];
            }
        }
        let ok = accept(rng, d);
        if ok {
            self.re[i] = new;
            if self.likelihood {
                self.ll_out[i] = lo;
                if self.dp.is_some() {
                    self.ll_drop[i] = ld;
                }
            }
        }
        self.p_re[i][j].record(ok, adapting);
    }

    fn dropout_move(&mut self, k: usize, rng: &mut SimRng, adapting: bool) {
        let sd = self.spec.dropout_prior_sd;
        let dp = self.dp.as_mut().expect("joint model");
        let (c, gg) = dp.owner(k);
        let g = gg.index();
        let old = dp.coefficients()[k];
        let new = old + self.p_dropout[k].scale() * std_normal(rng);
        let mut d = (old * old - new * new) / (2.0 * sd * sd);
        dp.coefficients_mut()[k] = new;
        dp.fill_profile(c, gg, &mut self.profiles[c][g]);
        let mut scratch = core::mem::take(&mut self.scratch);
        scratch.clear();
        if self.likelihood {
            for &i in &self.members[g] {
                let l = self.drop_ll(i, self.re[i]);
                d += l - self.ll_drop[i];
                scratch.push(l);
            }
        }
        let ok = accept(rng, d);
        if ok {
            for (&i, &l) in self.members[g].iter().zip(&scratch) {
                self.ll_drop[i] = l;
            }
        } else {
            let dp = self.dp.as_mut().expect("joint model");
            dp.coefficients_mut()[k] = old;
            dp.fill_profile(c, gg, &mut self.profiles[c][g]);
        }
        self.scratch = scratch;
        self.p_dropout[k].record(ok, adapting);
    }

    fn sweep(&mut self, rng: &mut SimRng, frozen: &FrozenParameters, adapting: bool) {
        for k in 0..4 {
            if frozen.lines[k] {
                continue;
            }
            self.line_move(k, rng, adapting);
            if !frozen.random_effects {
                self.shift_move(k, rng, adapting);
            }
        }
        if !frozen.sigma2 {
            self.sigma2_move(rng, adapting);
        }
        for k in 0..4 {
            if !frozen.taus[k] {
                self.tau_move(k, rng, adapting);
                if !frozen.random_effects {
                    self.tau_scale_move(k, rng, adapting);
                }
            }
        }
        if !frozen.random_effects {
            for i in 0..self.re.len() {
                self.re_move(i, 0, rng, adapting);
                self.re_move(i, 1, rng, adapting);
            }
        }
        if self.dp.is_some() && !frozen.dropout {
            for k in 0..self.p_dropout.len() {
                self.dropout_move(k, rng, adapting);
            }
        }
    }

    fn adapt(&mut self, target: f64) {
        let all = self
            .p_line
            .iter_mut()
            .chain(self.p_shift.iter_mut())
            .chain(core::iter::once(&mut self.p_sigma2))
            .chain(self.p_tau.iter_mut())
            .chain(self.p_tau_scale.iter_mut())
            .chain(self.p_re.iter_mut().flatten())
            .chain(self.p_dropout.iter_mut());
        for p in all {
            p.adapt(target);
        }
    }

    fn fixed(&self) -> FixedEffects {
        FixedEffects::with_lines(self.lines, self.sigma2)
    }

    fn state(&self) -> ParameterState {
        ParameterState {
            fixed: self.fixed(),
            variances: VarianceComponents::from_array(self.tau),
            random: self
                .re
                .iter()
                .zip(&self.group)
                .map(|(r, &g)| RandomEffects {
                    group: crate::data::ExposureGroup::BOTH[g],
                    intercept: r[0],
                    slope: r[1],
                })
                .collect(),
            dropout: self.dp.clone(),
        }
    }

    /// Log-posterior assembled from the cached likelihood terms.
    fn log_posterior(&self) -> f64 {
        let mut lp = crate::model::hyper_log_prior(
            &ParameterState {
                fixed: self.fixed(),
                variances: VarianceComponents::from_array(self.tau),
                random: Vec::new(),
                dropout: None,
            },
            self.spec,
        );
        if let Some(dp) = &self.dp {
            lp += dropout_log_prior(dp, self.spec.dropout_prior_sd);
        }
        let ln_t = self.tau.map(math::ln);
        for (r, &g) in self.re.iter().zip(&self.group) {
            for j in 0..2 {
                let t = self.tau[2 * g + j];
                lp -= 0.5 * r[j] * r[j] / (t * t) + ln_t[2 * g + j] + 0.5 * math::LN_2PI;
            }
        }
        lp + self.ll_out.iter().sum::<f64>() + self.ll_drop.iter().sum::<f64>()
    }

    fn record(&self, draws: &mut [Vec<f64>]) {
        let fe = self.fixed();
        let base = [
            self.lines[0],
            self.lines[1],
            self.lines[2],
            self.lines[3],
            self.sigma2,
            self.tau[0],
            self.tau[1],
            self.tau[2],
            self.tau[3],
            average_distance(&fe, self.n_times),
        ];
        for (col, v) in draws.iter_mut().zip(base) {
            col.push(v);
        }
        if let Some(dp) = &self.dp {
            for (col, &v) in draws[base.len()..].iter_mut().zip(dp.coefficients()) {
                col.push(v);
            }
        }
    }

    fn acceptance(&self) -> Vec<BlockAcceptance> {
        let mut out = Vec::new();
        for k in 0..4 {
            let name = OUTCOME_QUANTITIES[k];
            out.push(pooled_acceptance(name, core::slice::from_ref(&self.p_line[k])));
            out.push(pooled_acceptance(&format!("{name}:shift"), core::slice::from_ref(&self.p_shift[k])));
        }
        out.push(pooled_acceptance("sigma2", core::slice::from_ref(&self.p_sigma2)));
        for (k, name) in TAU_NAMES.iter().enumerate() {
            out.push(pooled_acceptance(name, core::slice::from_ref(&self.p_tau[k])));
            out.push(pooled_acceptance(&format!("{name}:scale"), core::slice::from_ref(&self.p_tau_scale[k])));
        }
        let intercepts: Vec<Proposal> = self.p_re.iter().map(|p| p[0].clone()).collect();
        let slopes: Vec<Proposal> = self.p_re.iter().map(|p| p[1].clone()).collect();
        out.push(pooled_acceptance("re_intercept", &intercepts));
        out.push(pooled_acceptance("re_slope", &slopes));
        if let Some(dp) = &self.dp {
            for (name, p) in dp.names().iter().zip(&self.p_dropout) {
                out.push(BlockAcceptance {
                    block: name.clone(),
                    rate: p.rate(),
                    scale: p.scale(),
                });
            }
        }
        out
    }
}

/// Group-wise least-squares line of `z` on `t`, falling back to the pooled
/// fit for an empty group.
fn least_squares_lines(data: &LongitudinalDataset) -> ([f64; 4], f64) {
    let mut acc = [[0.0f64; 5]; 3]; // n, Σt, Σz, Σtt, Σtz per group and pooled
    for s in data.subjects() {
        for o in &s.observations {
            let t = o.time as f64;
            for slot in [s.group.index(), 2] {
                let a = &mut acc[slot];
                a[0] += 1.0;
                a[1] += t;
                a[2] += o.z;
                a[3] += t * t;
                a[4] += t * o.z;
            }
        }
    }
    let fit = |a: &[f64; 5]| {
        let (mt, mz) = (a[1] / a[0], a[2] / a[0]);
        let sxx = a[3] - a[0] * mt * mt;
        let slope = if sxx > 1e-12 { (a[4] - a[0] * mt * mz) / sxx } else { 0.0 };
        (mz - slope * mt, slope)
    };
    let mut lines = [0.0; 4];
    for g in 0..2 {
        let src = if acc[g][0] > 0.0 { &acc[g] } else { &acc[2] };
        let (b0, b1) = fit(src);
        lines[2 * g] = b0;
        lines[2 * g + 1] = b1;
    }
    let mut rss = 0.0;
    for s in data.subjects() {
        let g = s.group.index();
        for o in &s.observations {
            let r = o.z - (lines[2 * g] + lines[2 * g + 1] * o.time as f64);
            rss += r * r;
        }
    }
    let dof = (acc[2][0] - 4.0).max(1.0);
    (lines, (rss / dof).max(1e-4))
}

/// Starting state: least-squares lines clipped to at least 0.01, SDs at half
/// their bounds, zero random effects and dropout coefficients. Attempts after
/// the first are jittered more widely.
pub fn initial_state(data: &LongitudinalDataset, spec: &ModelSpec, rng: &mut SimRng, attempt: usize) -> Result<ParameterState> {
    let (ls, s2) = least_squares_lines(data);
    let spread = 0.1 * (1.0 + attempt as f64);
    let lines = ls.map(|v| v.max(0.01) * math::exp(spread * std_normal(rng)));
    let sigma2 = s2 * math::exp(spread * std_normal(rng));
    let omega = spec.outcome_prior.omega;
    let upper = spec.outcome_prior.reference_tau_upper;
    let tau = lines.map(|v| {
        let half = 0.5 * v * omega;
        if spec.variant.is_folded() {
            half
        } else {
            half.min(0.5 * upper)
        }
    });
    let dropout = match spec.temporal {
        Some(kind) => Some(DropoutParams::zeros(kind, spec.n_times)?),
        None => None,
    };
    Ok(ParameterState {
        fixed: FixedEffects::with_lines(lines, sigma2),
        variances: VarianceComponents::from_array(tau),
        random: data.subjects().iter().map(|s| RandomEffects::zero(s.group)).collect(),
        dropout,
    })
}

/// Run one chain from the default initialization.
pub fn run_chain(data: &LongitudinalDataset, spec: &ModelSpec, cfg: &McmcConfig, chain_index: usize) -> Result<ChainOutput> {
    run_chain_from(data, spec, cfg, chain_index, None)
}

/// Run one chain, optionally from a given starting state (required when
/// some blocks are frozen, since frozen blocks keep their starting values).
pub fn run_chain_from(
    data: &LongitudinalDataset,
    spec: &ModelSpec,
    cfg: &McmcConfig,
    chain_index: usize,
    initial: Option<&ParameterState>,
) -> Result<ChainOutput> {
    cfg.validate()?;
    spec.validate()?;
    let seed = cfg.chain_seed(chain_index);
    let mut rng = SimRng::seed_from_u64(seed);

    let (state, init_attempts) = match initial {
        Some(st) => {
            let lp = log_posterior(st, data, spec)?;
            if !lp.is_finite() {
                return Err(Error::Initialization { attempts: 1 });
            }
            (st.clone(), 1)
        }
        None => {
            if cfg.frozen.any() {
                return Err(Error::Config("frozen parameters need an explicit starting state".to_string()));
            }
            let mut found = None;
            for attempt in 0..cfg.max_init_attempts {
                let st = initial_state(data, spec, &mut rng, attempt)?;
                if log_posterior(&st, data, spec)?.is_finite() {
                    found = Some((st, attempt + 1));
                    break;
                }
            }
            found.ok_or(Error::Initialization {
                attempts: cfg.max_init_attempts,
            })?
        }
    };

    let mut gibbs = Gibbs::new(data, spec, &state);
    let mut names: Vec<String> = OUTCOME_QUANTITIES.iter().map(|s| s.to_string()).collect();
    if let Some(dp) = &state.dropout {
        names.extend(dp.names());
    }
    let mut draws: Vec<Vec<f64>> = names.iter().map(|_| Vec::with_capacity(cfg.n_samples)).collect();
    let mut lps = Vec::with_capacity(cfg.n_samples);
    let mut re_draws = cfg.retain_random_effects.then(|| Vec::with_capacity(cfg.n_samples));

    let batch = cfg.adaptation.batch_size;
    for it in 0..cfg.burn_in {
        gibbs.sweep(&mut rng, &cfg.frozen, true);
        if (it + 1) % batch == 0 {
            gibbs.adapt(cfg.adaptation.target_accept);
        }
    }
    for _ in 0..cfg.n_samples {
        gibbs.sweep(&mut rng, &cfg.frozen, false);
        gibbs.record(&mut draws);
        let lp = gibbs.log_posterior();
        if !lp.is_finite() {
            return Err(crate::error::structure(format!(
                "chain {chain_index} reached a state with log-posterior {lp}"
            )));
        }
        lps.push(lp);
        if let Some(r) = re_draws.as_mut() {
            r.push(gibbs.re.clone());
        }
    }

    Ok(ChainOutput {
        chain_index,
        seed,
        init_attempts,
        names,
        draws,
        log_posterior: lps,
        acceptance: gibbs.acceptance(),
        random_effects: re_draws,
        final_state: gibbs.state(),
    })
}

/// Run `cfg.n_chains` chains one after another.
pub fn run_chains(data: &LongitudinalDataset, spec: &ModelSpec, cfg: &McmcConfig) -> Result<Vec<ChainOutput>> {
    cfg.validate()?;
    (0..cfg.n_chains).map(|c| run_chain(data, spec, cfg, c)).collect()
}
