//! Closed-form scalar kernels of the exponent calculus.
//!
//! All functions here are pure and allocation-free: the rate-capped
//! correlation gain `sup_corr_gain`, the collective-contribution exponent,
//! the union-bound pairwise exponent, the pairwise exponent `pair_exponent`
//! with its minimizing correlation, and the soft correlation gain
//! `weighted_corr_sup` used by the tightness analysis.

use crate::error::{invalid, Result};
use crate::optim::golden_min;

/// Stochastic-decoder temperature. `beta = ∞` is the deterministic
/// (metric-maximizing) decoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GldParams {
    beta: f64,
}

impl GldParams {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && !beta.is_nan() {
            Ok(Self { beta })
        } else {
            Err(invalid(format!("decoder temperature must be > 0, got {beta}")))
        }
    }

    /// Deterministic decoding (`beta = ∞`).
    pub fn deterministic() -> Self {
        Self { beta: f64::INFINITY }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// min(beta, 1/2), the temperature that the union-bound exponent sees.
    pub fn beta_hat(&self) -> f64 {
        self.beta.min(0.5)
    }

    pub fn is_deterministic(&self) -> bool {
        self.beta.is_infinite()
    }
}

/// Correlation coefficient restricted to the open interval (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Rho(f64);

impl Rho {
    pub fn new(value: f64) -> Result<Self> {
        if value > -1.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(invalid(format!("correlation must lie in (-1, 1), got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Per-frequency geometry of a codeword pair: channel snr, decoder mismatch
/// ratio `mu = sigma^2 / sigma_tilde^2`, tilt `lambda` and rate weight
/// `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    pub snr: f64,
    pub mu: f64,
    pub lambda: f64,
    pub theta: f64,
}

impl PairGeometry {
    pub fn new(snr: f64, mu: f64, lambda: f64, theta: f64) -> Result<Self> {
        if !(snr >= 0.0) {
            return Err(invalid(format!("snr must be >= 0, got {snr}")));
        }
        if !(mu > 0.0) {
            return Err(invalid(format!("mismatch ratio must be > 0, got {mu}")));
        }
        if !(lambda >= 0.0) {
            return Err(invalid(format!("tilt must be >= 0, got {lambda}")));
        }
        if !(theta >= 1.0) {
            return Err(invalid(format!("rate weight must be >= 1, got {theta}")));
        }
        Ok(Self { snr, mu, lambda, theta })
    }
}

/// Rate at which the correlation cap `sqrt(1 - e^(-2R))` stops binding in
/// `sup_corr_gain` for gain `u`.
fn gain_branch_rate(u: f64) -> f64 {
    0.5 * ((1.0 + (1.0 + 4.0 * u * u).sqrt()) / 2.0).ln()
}

/// sup of `rho * u + (1/2) ln(1 - rho^2)` over `|rho| <= sqrt(1 - e^(-2R))`.
///
/// Two branches: the constrained one (cap active, low rates) and the interior
/// one; they meet continuously at the branch rate. Ties resolve to the
/// constrained branch. Even in `u`.
pub fn sup_corr_gain(u: f64, rate: f64) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(invalid(format!("rate must be >= 0, got {rate}")));
    }
    let ua = u.abs();
    let rb = gain_branch_rate(ua);
    if rate <= rb {
        let cap = (1.0 - (-2.0 * rate).exp()).max(0.0).sqrt();
        Ok(ua * cap - rate)
    } else {
        let t = (1.0 + 4.0 * ua * ua).sqrt();
        Ok(2.0 * ua * ua / (1.0 + t) - 0.5 * ((1.0 + t) / 2.0).ln())
    }
}

/// Exponent of the collective contribution of incorrect codewords to the
/// decoder posterior at output variance `sigma_y2`:
/// `sup_corr_gain(beta sqrt(P) sigma_Y / sigma^2, R) + R`.
pub fn collective_exponent(
    rate: f64,
    sigma_y2: f64,
    power: f64,
    noise_var: f64,
    gld: GldParams,
) -> Result<f64> {
    if !(sigma_y2 > 0.0) {
        return Err(invalid(format!("output variance must be > 0, got {sigma_y2}")));
    }
    if !(power > 0.0) {
        return Err(invalid(format!("power must be > 0, got {power}")));
    }
    if !(noise_var > 0.0) {
        return Err(invalid(format!("noise variance must be > 0, got {noise_var}")));
    }
    let u = gld.beta() * power.sqrt() * sigma_y2.sqrt() / noise_var;
    Ok(sup_corr_gain(u, rate)? + rate)
}

/// Union-bound pairwise exponent at codeword correlation `rho`:
/// `snr * beta_hat * (1 - beta_hat) * (1 - rho)` with `beta_hat = min(beta, 1/2)`.
///
/// Affine and decreasing in `rho`, zero at `rho = 1`.
pub fn pairwise_exponent_lower(rho: Rho, snr: f64, gld: GldParams) -> f64 {
    let bh = gld.beta_hat();
    snr * bh * (1.0 - bh) * (1.0 - rho.value())
}

/// Minimizer of `s (1 - rho) + (theta/2) ln(1/(1 - rho^2))` over (-1, 1):
/// `2s / (sqrt(theta^2 + 4 s^2) + theta)`.
pub fn minimizing_corr(s: f64, theta: f64) -> Rho {
    let t = (theta * theta + 4.0 * s * s).sqrt();
    Rho(2.0 * s / (t + theta))
}

fn pair_objective(rho: f64, s: f64, theta: f64) -> f64 {
    s * (1.0 - rho) + 0.5 * theta * (1.0 / (1.0 - rho * rho)).ln()
}

fn pair_exponent_closed(s: f64, theta: f64) -> f64 {
    let t = (theta * theta + 4.0 * s * s).sqrt();
    s * (1.0 - 2.0 * s / (t + theta)) - 0.5 * theta * (2.0 * theta / (t + theta)).ln()
}

/// Pairwise exponent `A`: infimum of
/// `lambda mu (1 - lambda mu) snr (1 - rho) + (theta/2) ln(1/(1 - rho^2))`
/// over `rho` in (-1, 1).
///
/// With `s = lambda mu (1 - lambda mu) snr >= 0` the closed form at
/// `minimizing_corr` applies and the value is nonnegative. For
/// `lambda mu > 1` the weight `s` is negative and the infimum (attained at a
/// negative correlation) is found by direct one-dimensional minimization; the
/// value is then negative.
pub fn pair_exponent(g: &PairGeometry) -> f64 {
    let lm = g.lambda * g.mu;
    let s = lm * (1.0 - lm) * g.snr;
    if s >= 0.0 {
        pair_exponent_closed(s, g.theta)
    } else {
        let (_, v) = golden_min(
            |rho| pair_objective(rho, s, g.theta),
            -1.0 + 1e-12,
            0.0,
            1e-14,
        );
        v
    }
}

/// Soft correlation gain `max over rho of a rho + (lambda/2) ln(1 - rho^2)`:
/// `2a^2/(lambda + sqrt(lambda^2 + 4a^2)) + (lambda/2) ln(2 lambda/(lambda + sqrt(lambda^2 + 4a^2)))`.
///
/// Vanishes as `lambda -> ∞` at fixed `a`. Even in `a`.
pub fn weighted_corr_sup(a: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("weight must be > 0, got {lambda}")));
    }
    let aa = a.abs();
    let t = (lambda * lambda + 4.0 * aa * aa).sqrt();
    Ok(2.0 * aa * aa / (lambda + t) + 0.5 * lambda * (2.0 * lambda / (lambda + t)).ln())
}
