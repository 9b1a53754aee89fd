//! Water-pouring optimization of the input spectrum for the colored-channel
//! exponent: the closed-form allocation at a given water level, the
//! power-constraint fixed point, and the outer search over the tilt and the
//! rate weight.

use crate::error::{invalid, Error, Result};
use crate::optim::{bisect_increasing, golden_max, scan_max};
use crate::scalar::{minimizing_corr, pair_exponent, GldParams, PairGeometry};
use crate::spectral::Spectrum;

/// Result of a water-pouring solve: the level `B`, the tilt and rate weight
/// it was solved for, the allocated input spectrum, the power it actually
/// meets and the exponent it achieves.
#[derive(Debug, Clone)]
pub struct WaterPouringSolution {
    pub water_level: f64,
    pub lambda: f64,
    pub theta: f64,
    pub sx: Spectrum,
    pub achieved_power: f64,
    pub exponent: f64,
    pub flags: Vec<String>,
}

#[inline]
fn tilt_weight(lambda: f64, mu: f64) -> f64 {
    let lm = lambda * mu;
    lm * (1.0 - lm)
}

#[inline]
fn allocation_value(b: f64, lambda: f64, theta: f64, sz: f64, mu: f64) -> f64 {
    let c = tilt_weight(lambda, mu);
    if c <= 0.0 {
        return 0.0;
    }
    let pos = (4.0 * b * c - sz).max(0.0);
    if pos == 0.0 {
        0.0
    } else {
        4.0 * theta * b * pos / (4.0 * b * c + pos)
    }
}

/// Input spectrum at water level `b`:
/// `S_X = 4 theta B [4 B c - S_Z]_+ / (4 B c + [4 B c - S_Z]_+)` with
/// `c = lambda mu (1 - lambda mu)`; frequencies with `c <= 0` carry nothing.
pub fn allocation(b: f64, lambda: f64, theta: f64, sz: &Spectrum, mu: &Spectrum) -> Result<Spectrum> {
    if !(b > 0.0) {
        return Err(invalid(format!("water level must be > 0, got {b}")));
    }
    if sz.len() != mu.len() {
        return Err(invalid("noise and mismatch grids differ"));
    }
    let values = sz
        .values()
        .iter()
        .zip(mu.values())
        .map(|(z, m)| allocation_value(b, lambda, theta, *z, *m))
        .collect();
    Spectrum::new(values)
}

fn mean_power(b: f64, lambda: f64, theta: f64, sz: &Spectrum, mu: &Spectrum) -> f64 {
    let n = sz.len() as f64;
    sz.values()
        .iter()
        .zip(mu.values())
        .map(|(z, m)| allocation_value(b, lambda, theta, *z, *m))
        .sum::<f64>()
        / n
}

/// Solves the water level so the allocation meets `power`, then scores the
/// induced channel at the given `(lambda, theta, rate)`:
/// exponent = mean pairwise exponent - (2 theta - 1) rate.
pub fn solve_level(
    power: f64,
    lambda: f64,
    theta: f64,
    rate: f64,
    sz: &Spectrum,
    mu: &Spectrum,
) -> Result<WaterPouringSolution> {
    if !(power > 0.0) {
        return Err(invalid(format!("power must be > 0, got {power}")));
    }
    if !(theta >= 1.0) || !(lambda >= 0.0) || !(rate >= 0.0) {
        return Err(invalid("need theta >= 1, lambda >= 0, rate >= 0"));
    }
    if sz.len() != mu.len() {
        return Err(invalid("noise and mismatch grids differ"));
    }
    let mut b_lo = f64::INFINITY;
    for (z, m) in sz.values().iter().zip(mu.values()) {
        let c = tilt_weight(lambda, *m);
        if c > 0.0 {
            b_lo = b_lo.min(z / (4.0 * c));
        }
    }
    if !b_lo.is_finite() {
        return Err(Error::Infeasible(
            "no frequency can carry power at this tilt".into(),
        ));
    }
    let pw = |b: f64| mean_power(b, lambda, theta, sz, mu);
    let mut b_hi = b_lo;
    for _ in 0..300 {
        if pw(b_hi) >= power {
            break;
        }
        b_hi *= 2.0;
    }
    if pw(b_hi) < power {
        return Err(Error::Infeasible("power target unreachable".into()));
    }
    // allocated power grows with the level; probe before bisecting
    let mut prev = 0.0;
    for k in 0..=8 {
        let b = b_lo + (b_hi - b_lo) * k as f64 / 8.0;
        let p = pw(b);
        if p < prev - 1e-12 * power {
            return Err(Error::NonConvergence(
                "allocated power is not monotone in the water level".into(),
            ));
        }
        prev = p;
    }
    let b = bisect_increasing(pw, b_lo, b_hi, power, 1e-15);
    let sx = allocation(b, lambda, theta, sz, mu)?;
    let achieved = sx.mean();
    if (achieved - power).abs() > 1e-8 * power.max(1.0) {
        return Err(Error::NonConvergence(format!(
            "water-level bisection met power {achieved} instead of {power}"
        )));
    }
    let n = sz.len() as f64;
    let mean_a = sx
        .values()
        .iter()
        .zip(sz.values().iter().zip(mu.values()))
        .map(|(x, (z, m))| {
            pair_exponent(&PairGeometry { snr: x / z, mu: *m, lambda, theta })
        })
        .sum::<f64>()
        / n;
    Ok(WaterPouringSolution {
        water_level: b,
        lambda,
        theta,
        sx,
        achieved_power: achieved,
        exponent: mean_a - (2.0 * theta - 1.0) * rate,
        flags: Vec::new(),
    })
}

/// Outer optimization: log-spaced grid over the rate weight (grown and then
/// refined by a golden pass), golden section over the tilt per grid point.
pub fn optimize(
    rate: f64,
    power: f64,
    sz: &Spectrum,
    mu: &Spectrum,
    gld: GldParams,
) -> Result<WaterPouringSolution> {
    if !(rate >= 0.0) {
        return Err(invalid(format!("rate must be >= 0, got {rate}")));
    }
    let beta = gld.beta();
    let mu_min = mu.min_value();
    if !(mu_min > 0.0) {
        return Err(invalid("mismatch ratio must be strictly positive"));
    }
    let lambda_cap = beta.min((1.0 - 1e-12) / mu_min);
    let mu_span = mu.max_value() - mu_min;
    let matched = mu_span <= 1e-12 * mu.max_value().max(1.0);

    let best_lambda_for = |theta: f64| -> (f64, f64) {
        if matched {
            let lam = beta.min(1.0 / (2.0 * mu_min));
            let v = solve_level(power, lam, theta, rate, sz, mu)
                .map(|s| s.exponent)
                .unwrap_or(f64::NEG_INFINITY);
            return (lam, v);
        }
        let score = |lam: f64| {
            solve_level(power, lam, theta, rate, sz, mu)
                .map(|s| s.exponent)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let lo = 1e-4 * lambda_cap;
        let (_, coarse_lam, _) = scan_max(score, lo, lambda_cap, 25);
        let step = (lambda_cap - lo) / 24.0;
        let (lam, v) = golden_max(
            score,
            (coarse_lam - step).max(lo),
            (coarse_lam + step).min(lambda_cap),
            1e-11,
        );
        (lam, v)
    };

    // grow the rate-weight grid until the top stops winning
    let mut theta_hi = 64.0f64;
    let mut flags: Vec<String> = Vec::new();
    let (mut best_theta, mut best_lambda, mut best_value);
    loop {
        let count = 32usize;
        let thetas: Vec<f64> = (0..count)
            .map(|i| (theta_hi.ln() * i as f64 / (count - 1) as f64).exp())
            .collect();
        let mut profile = Vec::with_capacity(count);
        let mut best = (thetas[0], 0.0f64, f64::NEG_INFINITY);
        for &t in &thetas {
            let (lam, v) = best_lambda_for(t);
            profile.push(v);
            if v > best.2 {
                best = (t, lam, v);
            }
        }
        if crate::optim::has_multiple_maxima(&profile, 1e-8) {
            flags.push("rate-weight profile has multiple maxima".into());
        }
        if best.0 < thetas[count - 2] || theta_hi >= 1_048_576.0 {
            if best.0 >= thetas[count - 2] {
                flags.push("rate-weight search capped".into());
            }
            best_theta = best.0;
            best_lambda = best.1;
            best_value = best.2;
            break;
        }
        theta_hi *= 16.0;
        flags.clear();
    }
    // golden refinement over ln theta around the winning grid point
    let ratio = theta_hi.ln() / 31.0;
    let t_lo = (best_theta.ln() - ratio).max(0.0);
    let t_hi = best_theta.ln() + ratio;
    let (lt, v) = golden_max(|lt: f64| best_lambda_for(lt.exp()).1, t_lo, t_hi, 1e-10);
    if v > best_value {
        best_theta = lt.exp().max(1.0);
        let (lam, vv) = best_lambda_for(best_theta);
        best_lambda = lam;
        best_value = vv;
    }
    let mut sol = solve_level(power, best_lambda, best_theta, rate, sz, mu)?;
    debug_assert!((sol.exponent - best_value).abs() < 1e-9);
    sol.flags = flags;
    Ok(sol)
}

/// Stationarity diagnostics of a solution: on the support the marginal
/// exponent gain `c (1 - rho*(snr))` must equal `S_Z / (4B)`; off the
/// support it must not exceed it; and the product form of the two must
/// vanish everywhere.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    pub max_support_residual: f64,
    pub max_off_support_violation: f64,
    pub max_complementary_slackness: f64,
}

pub fn kkt_report(sol: &WaterPouringSolution, sz: &Spectrum, mu: &Spectrum) -> KktReport {
    let xi = 1.0 / (4.0 * sol.water_level);
    let mut on: f64 = 0.0;
    let mut off: f64 = 0.0;
    let mut comp: f64 = 0.0;
    for ((x, z), m) in sol.sx.values().iter().zip(sz.values()).zip(mu.values()) {
        let c = tilt_weight(sol.lambda, *m);
        let snr = x / z;
        let marginal = if c <= 0.0 {
            0.0
        } else {
            c * (1.0 - minimizing_corr(c * snr, sol.theta).value())
        };
        let resid = marginal - xi * z;
        if *x > 1e-12 {
            on = on.max(resid.abs());
        } else {
            off = off.max(resid.max(0.0));
        }
        comp = comp.max((x * resid).abs());
    }
    KktReport {
        max_support_residual: on,
        max_off_support_violation: off,
        max_complementary_slackness: comp,
    }
}
