mod support;

use magfold_core::distributions::{
    folded_ln_pdf_unchecked, inverse_gamma_ln_pdf, normal_ln_pdf, FoldedNormal, GammaShapeScale, TruncatedNormal,
};
use magfold_core::rng::stream;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma as StatrsGamma, Normal};
use support::{integrate, integrate_half_line, ks_critical_1pct, ks_statistic};

const MUS: [f64; 5] = [0.0, 0.5, -0.5, 2.0, -2.0];
const SIGMAS: [f64; 4] = [0.05, 0.5, 1.0, 3.0];

#[test]
fn folded_density_integrates_to_one() {
    for mu in MUS {
        for sigma in SIGMAS {
            let fd = FoldedNormal::new(mu, sigma).unwrap();
            let mass = integrate_half_line(|z| fd.pdf(z).unwrap(), &[mu.abs()], 40.0 * sigma, 1e-11);
            assert!((mass - 1.0).abs() < 1e-8, "mu={mu} sigma={sigma}: {mass}");
        }
    }
}

#[test]
fn sign_of_mu_is_irrelevant_bit_for_bit() {
    let mut rng = stream(5, &[0]);
    use rand::Rng;
    for _ in 0..10_000 {
        let mu: f64 = rng.random_range(-5.0..5.0);
        let sigma: f64 = rng.random_range(0.01..3.0);
        let z: f64 = rng.random_range(0.0..8.0);
        assert_eq!(
            folded_ln_pdf_unchecked(z, mu, sigma).to_bits(),
            folded_ln_pdf_unchecked(z, -mu, sigma).to_bits()
        );
    }
}

#[test]
fn cdf_derivative_matches_density() {
    let h = 1e-5;
    for mu in MUS {
        for sigma in SIGMAS {
            let fd = FoldedNormal::new(mu, sigma).unwrap();
            for i in 1..60 {
                let z = i as f64 * (mu.abs() + 4.0 * sigma) / 60.0;
                let fdiff = (fd.cdf(z + h).unwrap() - fd.cdf(z - h).unwrap()) / (2.0 * h);
                let pdf = fd.pdf(z).unwrap();
                assert!((fdiff - pdf).abs() < 1e-6 * pdf.max(1.0), "mu={mu} sigma={sigma} z={z}: {fdiff} vs {pdf}");
            }
        }
    }
}

#[test]
fn small_sigma_folded_density_is_normal() {
    for (mu, sigma) in [(1.0, 0.1), (0.15, 0.01), (2.0, 0.05), (0.5, 0.05)] {
        let fd = FoldedNormal::new(mu, sigma).unwrap();
        let sup = (0..=20_000)
            .map(|i| i as f64 * (mu + 10.0 * sigma) / 20_000.0)
            .map(|z| (fd.pdf(z).unwrap() - normal_ln_pdf(z, mu, sigma).exp()).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-4, "mu={mu} sigma={sigma}: {sup}");
    }
}

#[test]
fn folded_sampler_passes_ks() {
    for (i, (mu, sigma)) in [(0.0, 1.0), (0.5, 0.5), (-2.0, 3.0), (0.15, 0.06)].into_iter().enumerate() {
        let fd = FoldedNormal::new(mu, sigma).unwrap();
        let mut rng = stream(11, &[i as u64]);
        let xs: Vec<f64> = (0..100_000).map(|_| fd.sample(&mut rng)).collect();
        let d = ks_statistic(xs, |z| fd.cdf(z).unwrap());
        assert!(d < ks_critical_1pct(100_000), "mu={mu} sigma={sigma}: D={d}");
    }
}

#[test]
fn folded_mean_matches_quadrature() {
    for (mu, sigma) in [(0.0, 1.0), (0.5, 0.5), (-2.0, 3.0)] {
        let fd = FoldedNormal::new(mu, sigma).unwrap();
        let m = integrate_half_line(|z| z * fd.pdf(z).unwrap(), &[mu.abs()], 40.0 * sigma, 1e-11);
        assert!((m - fd.mean()).abs() < 1e-8);
    }
}

#[test]
fn truncated_normal_matches_quadrature_oracle() {
    for (zeta, rho2, lower) in [(0.0, 1.0, 0.0), (0.15, 100.0, 0.0), (-1.0, 0.25, 0.3), (0.0, 1.0, 6.0)] {
        let tn = TruncatedNormal::new(zeta, rho2, lower).unwrap();
        let rho = f64::sqrt(rho2);
        let kernel = |x: f64| normal_ln_pdf(x, zeta, rho).exp();
        let mass = integrate(kernel, lower, lower.max(zeta) + 40.0 * rho, 1e-14);
        for k in 0..20 {
            let x = lower + k as f64 * 0.25 * rho;
            let oracle = (kernel(x) / mass).ln();
            let got = tn.ln_pdf(x);
            assert!((got - oracle).abs() < 1e-6 * oracle.abs().max(1.0), "{zeta} {rho2} {lower} x={x}: {got} vs {oracle}");
        }
        assert_eq!(tn.ln_pdf(lower - 1e-9), f64::NEG_INFINITY);
    }
}

#[test]
fn truncated_normal_sampler_passes_ks() {
    for (i, (zeta, rho2, lower)) in [(0.0, 1.0, 0.0), (0.0, 1.0, 6.5), (2.0, 4.0, -1.0)].into_iter().enumerate() {
        let tn = TruncatedNormal::new(zeta, rho2, lower).unwrap();
        let n = Normal::new(zeta, rho2.sqrt()).unwrap();
        let (lo_cdf, tail) = (n.cdf(lower), n.sf(lower));
        let mut rng = stream(13, &[i as u64]);
        let xs: Vec<f64> = (0..50_000).map(|_| tn.sample(&mut rng)).collect();
        assert!(xs.iter().all(|&x| x >= lower));
        let d = ks_statistic(xs, |x| if lower - zeta > 5.0 { 1.0 - n.sf(x) / tail } else { (n.cdf(x) - lo_cdf) / tail });
        assert!(d < ks_critical_1pct(50_000), "case {i}: D={d}");
    }
}

#[test]
fn gamma_sampler_passes_ks_and_means() {
    for (i, (k, theta)) in [(1.0, 2.0), (2.95, 9.75), (3.56, 1.54), (0.6, 1.0)].into_iter().enumerate() {
        let g = GammaShapeScale::new(k, theta).unwrap();
        let oracle = StatrsGamma::new(k, 1.0 / theta).unwrap();
        let mut rng = stream(17, &[i as u64]);
        let xs: Vec<f64> = (0..100_000).map(|_| g.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let se = (k * theta * theta / xs.len() as f64).sqrt();
        assert!((mean - k * theta).abs() < 4.0 * se, "k={k}: {mean}");
        let d = ks_statistic(xs, |x| oracle.cdf(x));
        assert!(d < ks_critical_1pct(100_000), "k={k} theta={theta}: D={d}");
    }
}

#[test]
fn gamma_cdf_from_stated_density() {
    let (k, theta) = (3.56f64, 1.54f64);
    let ln_norm = libm::lgamma(k) + k * theta.ln();
    let p = integrate(|t| if t <= 0.0 { 0.0 } else { ((k - 1.0) * t.ln() - t / theta - ln_norm).exp() }, 0.0, 6.0, 1e-12);
    let g = GammaShapeScale::new(k, theta).unwrap();
    let mut rng = stream(19, &[0]);
    let n = 200_000;
    let hits = (0..n).filter(|_| g.sample(&mut rng) <= 6.0).count() as f64 / n as f64;
    assert!((hits - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{hits} vs {p}");
}

#[test]
fn inverse_gamma_density_integrates() {
    for (a, b) in [(3.0, 0.02), (2.0, 1.0)] {
        let f = |u: f64| (inverse_gamma_ln_pdf(u.exp(), a, b) + u).exp();
        let mass: f64 = (-30..60).map(|i| integrate(f, i as f64, i as f64 + 1.0, 1e-13)).sum();
        assert!((mass - 1.0).abs() < 1e-8, "{a} {b}: {mass}");
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(FoldedNormal::new(0.0, 0.0).is_err());
    assert!(FoldedNormal::new(f64::NAN, 1.0).is_err());
    assert!(FoldedNormal::new(0.0, 1.0).unwrap().ln_pdf(-0.1).is_err());
    assert!(GammaShapeScale::new(-1.0, 1.0).is_err());
    assert!(GammaShapeScale::new(1.0, 0.0).is_err());
    assert!(TruncatedNormal::new(0.0, -1.0, 0.0).is_err());
}

proptest! {
    #[test]
    fn folded_density_finite_and_dominates_normal(z in 0.0f64..50.0, mu in -20.0f64..20.0, sigma in 1e-3f64..10.0) {
        let lp = folded_ln_pdf_unchecked(z, mu, sigma);
        prop_assert!(!lp.is_nan());
        prop_assert!(lp >= normal_ln_pdf(z, mu, sigma) - 1e-12);
    }

    #[test]
    fn folded_cdf_is_monotone(a in 0.0f64..10.0, b in 0.0f64..10.0, mu in -5.0f64..5.0, sigma in 0.01f64..5.0) {
        let fd = FoldedNormal::new(mu, sigma).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(fd.cdf(lo).unwrap() <= fd.cdf(hi).unwrap());
    }
}
