//! Numerical oracles and reduced-model fixtures shared by the integration
//! tests and the acceptance harness.

#![allow(dead_code)]

use magfold_core::data::{DropoutCause, ExposureGroup, LongitudinalDataset, SubjectData};
use magfold_core::diagnostics::{ess_draws, pooled};
use magfold_core::distributions::{normal_sample, TruncatedNormal};
use magfold_core::model::{log_posterior, ModelSpec, ParameterState};
use magfold_core::outcome::{FixedEffects, OutcomePriorConfig, RandomEffects, VarianceComponents};
use magfold_core::rng::{stream, SimRng};
use magfold_core::sampler::{run_chain_from, FrozenParameters, McmcConfig};
use rand::Rng;

fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Integral over `[0, ∞)` of a density concentrated within `width` of the
/// points in `centers`, split at those points so no mode is stepped over.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, centers: &[f64], width: f64, tol: f64) -> f64 {
    let mut knots: Vec<f64> = vec![0.0];
    for &c in centers {
        for x in [c - width, c - width / 8.0, c, c + width / 8.0] {
            if x > 0.0 {
                knots.push(x);
            }
        }
    }
    let end = centers.iter().fold(0.0f64, |m, &c| m.max(c)) + width;
    knots.push(end);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots.windows(2).map(|w| integrate(&f, w[0], w[1], tol / knots.len() as f64)).sum()
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(mut xs: Vec<f64>, cdf: F) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS distance.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// 1% critical value of χ² with 9 degrees of freedom.
pub const CHI2_9DF_1PCT: f64 = 21.666;

pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

/// Fixed effects, SDs and random effects of a cohort drawn around known truth.
pub struct Fixture {
    pub data: LongitudinalDataset,
    pub truth: ParameterState,
}

fn draw_cohort(rng: &mut SimRng, fixed: FixedEffects, taus: VarianceComponents, groups: &[ExposureGroup], n_times: usize) -> Fixture {
    let sigma = fixed.sigma2.sqrt();
    let mut subjects = Vec::new();
    let mut random = Vec::new();
    for (i, &g) in groups.iter().enumerate() {
        let re = RandomEffects {
            group: g,
            intercept: normal_sample(rng, 0.0, taus.intercept_sd(g)),
            slope: normal_sample(rng, 0.0, taus.slope_sd(g)),
        };
        let z: Vec<f64> = (0..n_times)
            .map(|t| {
                let mu = fixed.intercept(g) + re.intercept + (fixed.slope(g) + re.slope) * t as f64;
                normal_sample(rng, mu, sigma).abs()
            })
            .collect();
        subjects.push(SubjectData::from_magnitudes(format!("s{i}"), g, &z, DropoutCause::Completed));
        random.push(re);
    }
    Fixture {
        data: LongitudinalDataset::new(n_times, subjects).unwrap(),
        truth: ParameterState {
            fixed,
            variances: taus,
            random,
            dropout: None,
        },
    }
}

const TWO_BY_TWO: [ExposureGroup; 4] = [
    ExposureGroup::Unexposed,
    ExposureGroup::Unexposed,
    ExposureGroup::Exposed,
    ExposureGroup::Exposed,
];

fn oracle_taus() -> VarianceComponents {
    VarianceComponents::from_array([0.03, 0.003, 0.02, 0.001])
}

/// Four subjects, K = 3, drawn with random effects and SDs at known values.
pub fn oracle_fixture(seed: u64) -> Fixture {
    let fixed = FixedEffects::with_lines([0.15, 0.015, 0.08, 0.005], 0.06 * 0.06);
    draw_cohort(&mut stream(seed, &[1]), fixed, oracle_taus(), &TWO_BY_TWO, 3)
}

fn with_c(truth: &ParameterState, c0: f64, c1: f64) -> ParameterState {
    let mut s = truth.clone();
    s.fixed.c0 = c0;
    s.fixed.c1 = c1;
    s
}

/// Posterior mean of `(c0, c1)` by midpoint quadrature on an `n × n` grid
/// covering the support left by the fixed SDs.
pub fn grid_posterior_mean(fx: &Fixture, spec: &ModelSpec, n: usize) -> (f64, f64) {
    let omega = spec.outcome_prior.omega;
    let taus = fx.truth.variances;
    let (lo0, hi0) = (taus.tau_a0 / omega, 0.6);
    let (lo1, hi1) = (taus.tau_a1 / omega, 0.3);
    let (h0, h1) = ((hi0 - lo0) / n as f64, (hi1 - lo1) / n as f64);
    let mut lps = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (c0, c1) = (lo0 + (i as f64 + 0.5) * h0, lo1 + (j as f64 + 0.5) * h1);
            lps.push((c0, c1, log_posterior(&with_c(&fx.truth, c0, c1), &fx.data, spec).unwrap()));
        }
    }
    let max = lps.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let (mut w, mut m0, mut m1) = (0.0, 0.0, 0.0);
    for (c0, c1, lp) in lps {
        let p = (lp - max).exp();
        w += p;
        m0 += p * c0;
        m1 += p * c1;
    }
    (m0 / w, m1 / w)
}

/// Everything but the named line coefficients frozen.
pub fn frozen_except_lines(free: [bool; 4]) -> FrozenParameters {
    FrozenParameters {
        lines: free.map(|f| !f),
        sigma2: true,
        taus: [true; 4],
        random_effects: true,
        dropout: true,
    }
}

/// Pooled MCMC means of `(c0, c1)` with only those two coefficients free.
pub fn mcmc_oracle_mean(fx: &Fixture, spec: &ModelSpec, seed: u64) -> (f64, f64) {
    let cfg = McmcConfig {
        frozen: frozen_except_lines([true, true, false, false]),
        ..McmcConfig::new(4, 2000, 5000, seed)
    };
    let start = with_c(&fx.truth, 0.2, 0.05);
    let chains: Vec<_> = (0..cfg.n_chains)
        .map(|c| run_chain_from(&fx.data, spec, &cfg, c, Some(&start)).unwrap())
        .collect();
    let mean = |q: &str| {
        let d = pooled(&chains, q).unwrap();
        d.iter().sum::<f64>() / d.len() as f64
    };
    (mean("c0"), mean("c1"))
}

/// Monte Carlo mean and SD of a draw sequence split into chains, with
/// ESS-based standard errors for both.
pub struct MomentCheck {
    pub mean: f64,
    pub sd: f64,
    pub mean_se: f64,
    pub sd_se: f64,
}

pub fn moment_check(chains: &[&[f64]]) -> MomentCheck {
    let all: Vec<f64> = chains.iter().flat_map(|c| c.iter().copied()).collect();
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let var = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let ess = ess_draws(chains).unwrap();
    let sq: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().map(|x| (x - mean).powi(2)).collect()).collect();
    let sq_refs: Vec<&[f64]> = sq.iter().map(|v| v.as_slice()).collect();
    let sq_all: Vec<f64> = sq.iter().flatten().copied().collect();
    let sq_var = sq_all.iter().map(|s| (s - var).powi(2)).sum::<f64>() / n;
    let sq_ess = ess_draws(&sq_refs).unwrap();
    let sd = var.sqrt();
    MomentCheck {
        mean,
        sd,
        mean_se: sd / ess.sqrt(),
        sd_se: (sq_var / sq_ess).sqrt() / (2.0 * sd),
    }
}

/// Prior settings for the likelihood-free run: the default line and SD
/// priors with a proper `σ²` prior so the chain never wanders off to
/// overflow.
pub fn prior_recovery_config() -> OutcomePriorConfig {
    OutcomePriorConfig {
        sigma2_shape: 3.0,
        sigma2_scale: 0.02,
        ..OutcomePriorConfig::default()
    }
}

/// Draws from `c0 | τ_a0` under the prior: a truncated normal on
/// `(τ_a0/ω, ∞)` tilted by `1/c0` (the uniform SD prior's normalizer),
/// sampled by rejection.
pub fn conditional_c0_prior(rng: &mut SimRng, zeta: f64, rho2: f64, tau: f64, omega: f64) -> f64 {
    let lower = tau / omega;
    let tn = TruncatedNormal::new(zeta, rho2, lower).unwrap();
    loop {
        let c0 = tn.sample(rng);
        if rng.random::<f64>() < lower / c0 {
            return c0;
        }
    }
}

/// Rank of the true `c0` among thinned posterior draws, for `replicates`
/// prior-predictive datasets of a reduced model (K = 3, six subjects, `c0`
/// and the random effects free). Returns ranks in `0..=n_draws`.
pub fn sbc_ranks(replicates: usize, n_draws: usize, thin: usize, seed: u64) -> Vec<usize> {
    let (zeta, rho2) = (0.15, 0.05 * 0.05);
    let prior = OutcomePriorConfig {
        zeta: [zeta, 0.0, 0.0, 0.0],
        rho2: [rho2, 100.0, 100.0, 100.0],
        ..OutcomePriorConfig::default()
    };
    let spec = ModelSpec::folded(3).with_outcome_prior(prior);
    let taus = oracle_taus();
    let groups = [
        ExposureGroup::Unexposed,
        ExposureGroup::Unexposed,
        ExposureGroup::Unexposed,
        ExposureGroup::Exposed,
        ExposureGroup::Exposed,
        ExposureGroup::Exposed,
    ];
    (0..replicates)
        .map(|r| {
            let mut rng = stream(seed, &[r as u64]);
            let c0 = conditional_c0_prior(&mut rng, zeta, rho2, taus.tau_a0, prior.omega);
            let fixed = FixedEffects::with_lines([c0, 0.015, 0.08, 0.005], 0.06 * 0.06);
            let fx = draw_cohort(&mut rng, fixed, taus, &groups, 3);
            let cfg = McmcConfig {
                frozen: FrozenParameters {
                    random_effects: false,
                    ..frozen_except_lines([true, false, false, false])
                },
                ..McmcConfig::new(1, 500, n_draws * thin, seed ^ r as u64)
            };
            let chain = run_chain_from(&fx.data, &spec, &cfg, 0, Some(&fx.truth)).unwrap();
            chain
                .quantity("c0")
                .unwrap()
                .iter()
                .step_by(thin)
                .filter(|&&d| d < c0)
                .count()
        })
        .collect()
}
