//! Convergence diagnostics and posterior summaries.
//!
//! `R̂` is the rank-normalized split-`R̂`: each chain is split in half, draws
//! are replaced by normal scores of their pooled ranks, and the larger of
//! the bulk and folded (absolute deviation from the median) statistics is
//! reported. ESS uses Geyer's initial monotone sequence on the split chains.
//!
//! Quantiles use linear interpolation between order statistics at position
//! `h = (n-1)p` (the "type 7" rule), so for draws `1..=100` the 2.5% quantile
//! is 3.475.

use alloc::vec;
use alloc::vec::Vec;

use crate::distributions::std_normal_quantile;
use crate::sampler::ChainOutput;
use crate::{Error, Result};

/// Split-`R̂`, flagged when all draws are identical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rhat {
    pub value: f64,
    /// Draws were constant; `value` is then reported as 1.0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PosteriorSummary {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

/// Mean computed around the first element, exact for constant input.
fn mean(x: &[f64]) -> f64 {
    let x0 = x[0];
    x0 + x.iter().map(|v| v - x0).sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Interpolated quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn split(chains: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(c[..half].to_vec());
        out.push(c[c.len() - half..].to_vec());
    }
    out
}

/// Normal scores of pooled fractional ranks, `Φ⁻¹((r - 3/8)/(S + 1/4))`,
/// with ties sharing their average rank.
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut all: Vec<(f64, usize, usize)> = Vec::new();
    for (c, ch) in chains.iter().enumerate() {
        for (i, &v) in ch.iter().enumerate() {
            all.push((v, c, i));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let s = all.len() as f64;
    let mut out: Vec<Vec<f64>> = chains.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        let z = std_normal_quantile((rank - 0.375) / (s + 0.25));
        for item in &all[i..=j] {
            out[item.1][item.2] = z;
        }
        i = j + 1;
    }
    out
}

fn basic_rhat(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().map(|c| variance(c)).sum::<f64>() / chains.len() as f64;
    let b = n * variance(&means);
    let var_plus = (n - 1.0) / n * w + b / n;
    libm::sqrt(var_plus / w)
}

fn check_chains(chains: &[&[f64]], min_chains: usize) -> Result<usize> {
    if chains.len() < min_chains {
        return Err(Error::Config(alloc::format!("need at least {min_chains} chains, got {}", chains.len())));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::Config("chains differ in length".into()));
    }
    if n < 4 {
        return Err(Error::Config("need at least 4 draws per chain".into()));
    }
    Ok(n)
}

fn is_constant(chains: &[&[f64]]) -> bool {
    let first = chains[0][0];
    chains.iter().all(|c| c.iter().all(|&v| v == first))
}

/// Split-`R̂` over chains of equal length: the largest of the
/// rank-normalized bulk and tail statistics and the classic statistic on the
/// raw draws.
pub fn rhat_draws(chains: &[&[f64]]) -> Result<Rhat> {
    check_chains(chains, 2)?;
    if is_constant(chains) {
        return Ok(Rhat { value: 1.0, degenerate: true });
    }
    let halves = split(chains);
    let classic = basic_rhat(&halves);
    let bulk = basic_rhat(&rank_normalize(&halves)).max(if classic.is_finite() { classic } else { 0.0 });
    let mut pooled: Vec<f64> = chains.iter().flat_map(|c| c.iter().copied()).collect();
    pooled.sort_by(f64::total_cmp);
    let med = quantile_sorted(&pooled, 0.5);
    let folded: Vec<Vec<f64>> = halves.iter().map(|c| c.iter().map(|v| (v - med).abs()).collect()).collect();
    let tail = basic_rhat(&rank_normalize(&folded));
    let value = bulk.max(tail);
    Ok(Rhat {
        value: if value.is_finite() { value } else { 1.0 },
        degenerate: !value.is_finite(),
    })
}

fn demeaned(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    x.iter().map(|v| v - m).collect()
}

/// Biased autocovariance of demeaned draws at one lag.
fn autocovariance(d: &[f64], lag: usize) -> f64 {
    let n = d.len();
    d[..n - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
}

/// Effective sample size over chains of equal length.
pub fn ess_draws(chains: &[&[f64]]) -> Result<f64> {
    check_chains(chains, 1)?;
    if is_constant(chains) {
        return Ok(chains.iter().map(|c| c.len()).sum::<usize>() as f64);
    }
    let halves = split(chains);
    let m = halves.len() as f64;
    let n = halves[0].len();
    let centered: Vec<Vec<f64>> = halves.iter().map(|c| demeaned(c)).collect();
    let means: Vec<f64> = halves.iter().map(|c| mean(c)).collect();
    let nf = n as f64;
    let acov_mean = |t: usize| centered.iter().map(|d| autocovariance(d, t)).sum::<f64>() / m;
    let w = acov_mean(0) * nf / (nf - 1.0);
    let b_over_n = if halves.len() > 1 { variance(&means) } else { 0.0 };
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    let rho = |t: usize| 1.0 - (w - acov_mean(t)) / var_plus;

    // Geyer: sum consecutive pairs while positive, enforcing monotonicity.
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let mut pair = rho(t) + rho(t + 1);
        if pair < 0.0 {
            break;
        }
        if pair > prev_pair {
            pair = prev_pair;
        }
        tau += 2.0 * pair;
        prev_pair = pair;
        t += 2;
    }
    let total = m * nf;
    let tau = tau.max(1.0 / libm::log10(total).max(1.0));
    Ok(total / tau)
}

/// Mean, median, SD and the 2.5%/97.5% quantiles of a pooled sample.
pub fn summarize_draws(draws: &[f64]) -> Result<PosteriorSummary> {
    if draws.is_empty() {
        return Err(Error::Config("cannot summarize an empty sample".into()));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = mean(draws);
    let sd = if draws.len() > 1 { libm::sqrt(variance(draws).max(0.0)) } else { 0.0 };
    Ok(PosteriorSummary {
        mean: m,
        median: quantile_sorted(&sorted, 0.5),
        sd,
        q025: quantile_sorted(&sorted, 0.025),
        q975: quantile_sorted(&sorted, 0.975),
    })
}

fn collect<'a>(chains: &'a [ChainOutput], quantity: &str) -> Result<Vec<&'a [f64]>> {
    chains
        .iter()
        .map(|c| {
            c.quantity(quantity)
                .ok_or_else(|| Error::Config(alloc::format!("unknown quantity {quantity}")))
        })
        .collect()
}

/// All retained draws of `quantity`, chain by chain.
pub fn pooled(chains: &[ChainOutput], quantity: &str) -> Result<Vec<f64>> {
    Ok(collect(chains, quantity)?.concat())
}

pub fn rhat(chains: &[ChainOutput], quantity: &str) -> Result<Rhat> {
    rhat_draws(&collect(chains, quantity)?)
}

pub fn ess(chains: &[ChainOutput], quantity: &str) -> Result<f64> {
    ess_draws(&collect(chains, quantity)?)
}

pub fn summarize(chains: &[ChainOutput], quantity: &str) -> Result<PosteriorSummary> {
    summarize_draws(&pooled(chains, quantity)?)
}
