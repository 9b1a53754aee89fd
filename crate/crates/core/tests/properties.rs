//! Property tests for the scalar kernels and the shared invariants.

use proptest::prelude::*;
use trc_core::scalar::{
    pair_exponent, pairwise_exponent_lower, sup_corr_gain, GldParams, PairGeometry, Rho,
};
use trc_core::spectral::{spectral_mean, Spectrum};

fn pair_objective(rho: f64, s: f64, theta: f64) -> f64 {
    s * (1.0 - rho) + 0.5 * theta * (1.0 / (1.0 - rho * rho)).ln()
}

// Two-stage grid infimum over the correlation; the objective is strictly
// convex in rho, so zooming around the coarse argmin is exact.
fn pair_grid_min(s: f64, theta: f64) -> f64 {
    let lim = 1.0 - 1e-9;
    let coarse = 4001usize;
    let step = 2.0 * lim / (coarse - 1) as f64;
    let mut best = (-lim, pair_objective(-lim, s, theta));
    for i in 1..coarse {
        let rho = -lim + step * i as f64;
        let v = pair_objective(rho, s, theta);
        if v < best.1 {
            best = (rho, v);
        }
    }
    let lo = (best.0 - step).max(-lim);
    let hi = (best.0 + step).min(lim);
    let fine = 4001usize;
    let fs = (hi - lo) / (fine - 1) as f64;
    for i in 0..fine {
        let v = pair_objective(lo + fs * i as f64, s, theta);
        if v < best.1 {
            best = (lo + fs * i as f64, v);
        }
    }
    best.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pair_exponent_matches_grid(
        snr in 0.0..20.0f64,
        mu in 0.2..3.0f64,
        lambda in 0.0..2.0f64,
        theta in 1.0..50.0f64,
    ) {
        let g = PairGeometry::new(snr, mu, lambda, theta).unwrap();
        let got = pair_exponent(&g);
        let s = lambda * mu * (1.0 - lambda * mu) * snr;
        let want = pair_grid_min(s, theta);
        prop_assert!((got - want).abs() < 1e-5, "{got} vs {want}");
        if s >= 0.0 {
            prop_assert!(got >= -1e-12);
        }
    }

    #[test]
    fn corr_gain_matches_grid_and_monotone(u in 0.0..8.0f64, rate in 0.0..2.0f64) {
        let got = sup_corr_gain(u, rate).unwrap();
        let cap = (1.0 - (-2.0 * rate).exp()).sqrt();
        let mut want = f64::NEG_INFINITY;
        let n = 40_001usize;
        for i in 0..n {
            let rho = -cap + 2.0 * cap * i as f64 / (n - 1) as f64;
            want = want.max(rho * u + 0.5 * (1.0 - rho * rho).ln());
        }
        if cap == 0.0 {
            want = 0.0;
        }
        prop_assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        prop_assert!(sup_corr_gain(u, rate + 0.1).unwrap() >= got - 1e-12);
    }

    #[test]
    fn union_bound_affine_decreasing(snr in 0.0..20.0f64, beta in 0.01..3.0f64, rho in -0.99..0.99f64) {
        let gld = GldParams::new(beta).unwrap();
        let f = |r: f64| pairwise_exponent_lower(Rho::new(r).unwrap(), snr, gld);
        let v0 = f(rho);
        let v1 = f(rho + 0.005);
        prop_assert!(v1 <= v0 + 1e-12);
        // affine: midpoint value matches the chord
        let mid = f(rho + 0.0025);
        prop_assert!((mid - 0.5 * (v0 + v1)).abs() < 1e-12);
        // vanishes at coinciding codewords
        prop_assert!(f(1.0 - 1e-12).abs() < 1e-9 * (1.0 + snr));
    }

    #[test]
    fn spectral_mean_linear_and_exact_on_constants(
        level in 0.1..5.0f64,
        a in 0.2..3.0f64,
        b in -2.0..2.0f64,
    ) {
        let s = Spectrum::ar1(0.4, level, 64).unwrap();
        let lhs = spectral_mean(&s, |x| a * x * x + b * x);
        let rhs = a * spectral_mean(&s, |x| x * x) + b * spectral_mean(&s, |x| x);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        let c = Spectrum::constant(level, 32).unwrap();
        prop_assert!((spectral_mean(&c, |x| x) - level).abs() < 1e-14);
    }

    #[test]
    fn spherical_energy_exact(power in 0.0..9.0f64, seed in 0u64..1000) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = trc_core::sim::sample_spherical_segment(12, power, &mut rng);
        let e: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!((e - 12.0 * power).abs() <= 1e-12 * (1.0 + 12.0 * power));
    }

    #[test]
    fn water_solutions_meet_power(
        low in 0.2..1.0f64,
        ratio in 1.1..4.0f64,
        power in 0.3..4.0f64,
        theta in 1.0..6.0f64,
    ) {
        let sz = Spectrum::two_level(low, low * ratio, 0.5, 32).unwrap();
        let mu = Spectrum::constant(1.0, 32).unwrap();
        let sol = trc_core::waterpour::solve_level(power, 0.5, theta, 0.01, &sz, &mu).unwrap();
        prop_assert!((sol.achieved_power - power).abs() <= 1e-8 * power.max(1.0));
        prop_assert!(sol.sx.values().iter().all(|v| *v >= 0.0));
    }
}
