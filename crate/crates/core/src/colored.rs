//! Typical-random-code lower bound for the colored Gaussian channel: the
//! one-parameter base function `B(theta)`, the exponent curve with its
//! parametric representation, the critical rate, the zero-rate exponent and
//! the zero-rate random-coding exponent.

use crate::error::{invalid, Result};
use crate::optim::{derivative, sup_growing, sup_scan_golden};
use crate::scalar::{GldParams, PairGeometry};
use crate::spectral::Spectrum;
use serde::Serialize;

/// One quadrature node of a channel: spectra values, derived snr and
/// mismatch ratio, and the trapezoid weight (mirror-symmetric grids are
/// folded onto the half band).
#[derive(Debug, Clone, Copy)]
pub(crate) struct ChannelNode {
    pub sx: f64,
    pub sz: f64,
    pub szt: f64,
    pub snr: f64,
    pub mu: f64,
    pub weight: f64,
}

/// Colored Gaussian channel: input spectrum `sx` with mean power `power`,
/// noise spectrum `sz`, decoder-assumed noise spectrum `sz_tilde`, and the
/// decoder temperature.
#[derive(Debug, Clone)]
pub struct ChannelSpec {
    sx: Spectrum,
    sz: Spectrum,
    sz_tilde: Spectrum,
    power: f64,
    gld: GldParams,
    nodes: Vec<ChannelNode>,
}

impl ChannelSpec {
    pub fn new(
        sx: Spectrum,
        sz: Spectrum,
        sz_tilde: Spectrum,
        power: f64,
        gld: GldParams,
    ) -> Result<Self> {
        if sx.len() != sz.len() || sx.len() != sz_tilde.len() {
            return Err(invalid("channel spectra must share one grid"));
        }
        if !sz.is_strictly_positive() || !sz_tilde.is_strictly_positive() {
            return Err(invalid("noise spectra must be strictly positive"));
        }
        if !(power > 0.0) {
            return Err(invalid(format!("power must be > 0, got {power}")));
        }
        let mean = sx.mean();
        if (mean - power).abs() > 1e-8 * power.max(1.0) {
            return Err(invalid(format!(
                "input spectrum mean {mean} does not meet the power constraint {power}"
            )));
        }
        let nodes = build_nodes(&sx, &sz, &sz_tilde);
        Ok(Self { sx, sz, sz_tilde, power, gld, nodes })
    }

    /// Matched decoding: the decoder assumes the true noise spectrum.
    pub fn matched(sx: Spectrum, sz: Spectrum, power: f64, gld: GldParams) -> Result<Self> {
        let szt = sz.clone();
        Self::new(sx, sz, szt, power, gld)
    }

    /// Flat input and noise on `grid` bins; reduces to the white channel.
    pub fn flat_matched(power: f64, noise_var: f64, grid: usize, gld: GldParams) -> Result<Self> {
        let sx = Spectrum::constant(power, grid)?;
        let sz = Spectrum::constant(noise_var, grid)?;
        Self::matched(sx, sz, power, gld)
    }

    pub fn sx(&self) -> &Spectrum {
        &self.sx
    }

    pub fn sz(&self) -> &Spectrum {
        &self.sz
    }

    pub fn sz_tilde(&self) -> &Spectrum {
        &self.sz_tilde
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn gld(&self) -> GldParams {
        self.gld
    }

    pub fn grid(&self) -> usize {
        self.sx.len()
    }

    pub fn with_gld(&self, gld: GldParams) -> Self {
        let mut out = self.clone();
        out.gld = gld;
        out
    }

    /// Mismatch ratio `mu(w) = S_Z / S~_Z` per bin.
    pub fn mu(&self) -> Vec<f64> {
        self.sz
            .values()
            .iter()
            .zip(self.sz_tilde.values())
            .map(|(z, zt)| z / zt)
            .collect()
    }

    /// `snr(w) = S_X / S_Z` per bin.
    pub fn snr(&self) -> Vec<f64> {
        self.sx
            .values()
            .iter()
            .zip(self.sz.values())
            .map(|(x, z)| x / z)
            .collect()
    }

    pub fn is_matched(&self) -> bool {
        let mu = self.mu();
        let lo = mu.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo <= 1e-12 * hi.max(1.0)
    }

    pub(crate) fn nodes(&self) -> &[ChannelNode] {
        &self.nodes
    }

    pub(crate) fn node_mean(&self, f: impl Fn(&ChannelNode) -> f64) -> f64 {
        self.nodes.iter().map(|n| n.weight * f(n)).sum()
    }

    pub(crate) fn mu_min(&self) -> f64 {
        self.nodes.iter().map(|n| n.mu).fold(f64::INFINITY, f64::min)
    }

    /// Same channel on a coarser grid; the input spectrum is rescaled so the
    /// power constraint is met exactly after resampling.
    pub fn resampled(&self, grid: usize) -> Result<Self> {
        let sx = self.sx.resample(grid)?;
        let mean = sx.mean();
        let sx = if mean > 0.0 {
            sx.scaled(self.power / mean)?
        } else {
            sx
        };
        Self::new(
            sx,
            self.sz.resample(grid)?,
            self.sz_tilde.resample(grid)?,
            self.power,
            self.gld,
        )
    }
}

fn build_nodes(sx: &Spectrum, sz: &Spectrum, szt: &Spectrum) -> Vec<ChannelNode> {
    let n = sx.len();
    let make = |k: usize, weight: f64| ChannelNode {
        sx: sx.values()[k],
        sz: sz.values()[k],
        szt: szt.values()[k],
        snr: sx.values()[k] / sz.values()[k],
        mu: sz.values()[k] / szt.values()[k],
        weight,
    };
    let symmetric =
        sx.is_mirror_symmetric() && sz.is_mirror_symmetric() && szt.is_mirror_symmetric();
    if symmetric && n.is_multiple_of(2) {
        let mut nodes = Vec::with_capacity(n / 2 + 1);
        nodes.push(make(0, 1.0 / n as f64));
        for k in 1..n / 2 {
            nodes.push(make(k, 2.0 / n as f64));
        }
        nodes.push(make(n / 2, 1.0 / n as f64));
        nodes
    } else {
        (0..n).map(|k| make(k, 1.0 / n as f64)).collect()
    }
}

/// `B(theta)` together with its maximizing tilt.
#[derive(Debug, Clone, Copy)]
pub struct BTheta {
    pub value: f64,
    pub lambda: f64,
    pub multimodal: bool,
}

fn pair_exponent_node(node: &ChannelNode, lambda: f64, theta: f64) -> f64 {
    let g = PairGeometry { snr: node.snr, mu: node.mu, lambda, theta };
    crate::scalar::pair_exponent(&g)
}

pub(crate) fn b_theta_any(theta: f64, ch: &ChannelSpec) -> BTheta {
    let j = |lambda: f64| ch.node_mean(|n| pair_exponent_node(n, lambda, theta));
    let beta = ch.gld().beta();
    if ch.is_matched() {
        // constant mu: the tilt that maximizes lambda mu (1 - lambda mu) is
        // optimal at every frequency simultaneously
        let c = ch.node_mean(|n| n.mu);
        let lambda = beta.min(1.0 / (2.0 * c));
        return BTheta { value: j(lambda), lambda, multimodal: false };
    }
    // every per-frequency weight decreases beyond 1/(2 mu_min)
    let hi = beta.min(1.0 / (2.0 * ch.mu_min()));
    let (lambda, value, multimodal) = sup_scan_golden(j, 0.0, hi, 64, 1e-5);
    BTheta { value, lambda, multimodal }
}

/// Base function of the colored-channel exponent: the frequency average of
/// the pairwise exponent, maximized over the tilt in `[0, beta]`.
///
/// Nondecreasing and concave in `theta`. When the scan over the tilt is not
/// unimodal the result is flagged and comes from a fine-grid fallback.
pub fn b_theta_detail(theta: f64, ch: &ChannelSpec) -> Result<BTheta> {
    if !(theta >= 1.0) {
        return Err(invalid(format!("rate weight must be >= 1, got {theta}")));
    }
    Ok(b_theta_any(theta, ch))
}

pub fn b_theta(theta: f64, ch: &ChannelSpec) -> Result<f64> {
    Ok(b_theta_detail(theta, ch)?.value)
}

fn b_prime(theta: f64, ch: &ChannelSpec) -> f64 {
    let h = 1e-4 * theta;
    derivative(|t| b_theta_any(t, ch).value, theta, h)
}

/// One point of an exponent curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentPoint {
    pub rate: f64,
    pub exponent: f64,
    pub theta_opt: f64,
    pub lambda_opt: f64,
}

/// Exponent curve ordered by rate; `inconsistent` lists indices of points
/// whose parametric value disagrees with the direct supremum.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentCurve {
    pub points: Vec<ExponentPoint>,
    pub inconsistent: Vec<usize>,
}

/// Zero-rate exponent and its maximizing tilt.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZeroRate {
    pub exponent: f64,
    pub lambda: f64,
}

/// Closed-form zero-rate exponent. With `i1 = mean(mu snr)` and
/// `i2 = mean(mu^2 snr)`: the tilt clamps to `beta` when
/// `beta < i1/(2 i2)`, giving `beta i1 - beta^2 i2`; otherwise the interior
/// optimum `i1/(2 i2)` gives `i1^2/(4 i2)`.
pub fn zero_rate_exponent(ch: &ChannelSpec) -> ZeroRate {
    let i1 = ch.node_mean(|n| n.mu * n.snr);
    let i2 = ch.node_mean(|n| n.mu * n.mu * n.snr);
    if i2 <= 0.0 || i1 <= 0.0 {
        return ZeroRate { exponent: 0.0, lambda: 0.0 };
    }
    let beta = ch.gld().beta();
    let interior = i1 / (2.0 * i2);
    if beta < interior {
        ZeroRate { exponent: beta * i1 - beta * beta * i2, lambda: beta }
    } else {
        ZeroRate { exponent: i1 * i1 / (4.0 * i2), lambda: interior }
    }
}

/// Direct supremum form of the lower bound at one rate, with the optimizers.
pub fn trc_lower_point(rate: f64, ch: &ChannelSpec) -> Result<ExponentPoint> {
    if !(rate >= 0.0) {
        return Err(invalid(format!("rate must be >= 0, got {rate}")));
    }
    if rate == 0.0 {
        let zr = zero_rate_exponent(ch);
        return Ok(ExponentPoint {
            rate: 0.0,
            exponent: zr.exponent,
            theta_opt: f64::INFINITY,
            lambda_opt: zr.lambda,
        });
    }
    let h = |theta: f64| b_theta_any(theta, ch).value - (2.0 * theta - 1.0) * rate;
    let (theta, value) = sup_growing(h, 1.0, 1.6, 1e7);
    let detail = b_theta_any(theta, ch);
    Ok(ExponentPoint {
        rate,
        exponent: value,
        theta_opt: theta,
        lambda_opt: detail.lambda,
    })
}

/// Colored-channel TRC lower bound `sup over theta >= 1 of
/// B(theta) - (2 theta - 1) R`; the zero-rate value comes from the closed
/// form.
pub fn trc_lower(rate: f64, ch: &ChannelSpec) -> Result<f64> {
    Ok(trc_lower_point(rate, ch)?.exponent)
}

/// Parametric curve `R = B'(theta)/2`, `E = B(theta) - (2 theta - 1) R`,
/// with derivatives by Richardson-extrapolated central differences. Points
/// are emitted in rate order; entries whose exponent strays from the direct
/// supremum by more than 1e-5 are flagged.
pub fn parametric_curve(ch: &ChannelSpec, theta_grid: &[f64]) -> Result<ExponentCurve> {
    let mut points = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        if !(theta >= 1.0) {
            return Err(invalid(format!("rate weight must be >= 1, got {theta}")));
        }
        let rate = 0.5 * b_prime(theta, ch);
        let b = b_theta_any(theta, ch);
        let exponent = b.value - (2.0 * theta - 1.0) * rate;
        points.push(ExponentPoint { rate, exponent, theta_opt: theta, lambda_opt: b.lambda });
    }
    points.sort_by(|p, q| p.rate.partial_cmp(&q.rate).unwrap());
    let mut inconsistent = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let direct = trc_lower(p.rate.max(0.0), ch)?;
        if (direct - p.exponent).abs() > 1e-5 {
            inconsistent.push(i);
        }
    }
    Ok(ExponentCurve { points, inconsistent })
}

/// Critical rate of the colored curve, `B'(1)/2`, in closed form given the
/// maximizing tilt of `B(1)`:
/// `(1/4) mean over w of ln[(1 + sqrt(1 + 4 s(w)^2)) / 2]` with
/// `s = lambda mu (1 - lambda mu) snr`.
pub fn critical_rate(ch: &ChannelSpec) -> Result<f64> {
    let b1 = b_theta_detail(1.0, ch)?;
    let lambda = b1.lambda;
    Ok(0.25
        * ch.node_mean(|n| {
            let lm = lambda * n.mu;
            let s = lm * (1.0 - lm) * n.snr;
            ((1.0 + (1.0 + 4.0 * s * s).sqrt()) / 2.0).ln()
        }))
}

/// Zero-rate exponent of ordinary random coding under the same ensemble and
/// decoder; equals `B(1)`.
pub fn r0_random_coding(ch: &ChannelSpec) -> Result<f64> {
    b_theta(1.0, ch)
}

/// Fills `count` log-spaced values of `theta` on `[1, hi]`, descending.
pub fn descending_theta_grid(hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![hi.max(1.0)];
    }
    let mut grid: Vec<f64> = (0..count)
        .map(|i| (hi.ln() * i as f64 / (count - 1) as f64).exp())
        .collect();
    grid.reverse();
    grid
}
