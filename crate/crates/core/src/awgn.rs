//! Typical-random-code exponent for the white Gaussian channel: an exact
//! numerical evaluator of the pairwise exponent including the collective
//! posterior term, and the closed-form union-bound curve with its critical
//! rate.

use crate::error::{invalid, Error, Result};
use crate::optim::golden_min;
use crate::scalar::{collective_exponent, sup_corr_gain, GldParams, Rho};

/// White Gaussian channel with spherical codewords of per-symbol power
/// `power` and noise variance `noise_var`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnSpec {
    pub power: f64,
    pub noise_var: f64,
    pub gld: GldParams,
}

impl AwgnSpec {
    pub fn new(power: f64, noise_var: f64, gld: GldParams) -> Result<Self> {
        if !(power > 0.0) {
            return Err(invalid(format!("power must be > 0, got {power}")));
        }
        if !(noise_var > 0.0) {
            return Err(invalid(format!("noise variance must be > 0, got {noise_var}")));
        }
        Ok(Self { power, noise_var, gld })
    }

    pub fn snr(&self) -> f64 {
        self.power / self.noise_var
    }

    /// Effective union-bound weight `beta_hat (1 - beta_hat) snr`.
    fn effective_quarter_snr(&self) -> f64 {
        let bh = self.gld.beta_hat();
        bh * (1.0 - bh) * self.snr()
    }
}

/// Second-moment parametrization of the output fit at codeword correlation
/// `rho`: output variance and the two codeword-output correlations.
///
/// The regression form `Y = a X + b X' + V` always maps into the feasible
/// region, which is why the optimizer searches there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchPoint {
    pub sigma_y2: f64,
    pub rho_xy: f64,
    pub rho_xpy: f64,
}

impl SearchPoint {
    pub fn from_regression(rho: Rho, power: f64, a: f64, b: f64, v: f64) -> Self {
        let r = rho.value();
        let sigma_y2 = (a * a + 2.0 * r * a * b + b * b) * power + v;
        let sigma_y = sigma_y2.sqrt();
        SearchPoint {
            sigma_y2,
            rho_xy: (a + r * b) * power.sqrt() / sigma_y,
            rho_xpy: (r * a + b) * power.sqrt() / sigma_y,
        }
    }

    /// Positive semi-definiteness of the 3x3 second-moment matrix of
    /// `(X, X', Y)`, checked through its leading principal minors.
    pub fn is_feasible(&self, rho: Rho, power: f64, tol: f64) -> bool {
        let r = rho.value();
        let sy = self.sigma_y2.sqrt();
        let (cxy, cxpy) = (
            self.rho_xy * power.sqrt() * sy,
            self.rho_xpy * power.sqrt() * sy,
        );
        let m2 = power * power * (1.0 - r * r);
        let det = power
            * (power * self.sigma_y2 - cxpy * cxpy)
            - r * power * (r * power * self.sigma_y2 - cxy * cxpy)
            + cxy * (r * power * cxpy - power * cxy);
        let scale = (power * power * self.sigma_y2).max(1.0);
        power > 0.0 && m2 >= -tol * scale && det >= -tol * scale
    }
}

struct FullObjective {
    rho: f64,
    rate: f64,
    p: f64,
    s2: f64,
    gld: GldParams,
}

impl FullObjective {
    fn eval(&self, a: f64, b: f64, v: f64) -> f64 {
        let (rho, p, s2) = (self.rho, self.p, self.s2);
        let quad_fit = (a - 1.0) * (a - 1.0) + 2.0 * rho * (a - 1.0) * b + b * b;
        let gauss = (quad_fit * p + v) / (2.0 * s2) - 0.5 + 0.5 * (s2 / v).ln();
        let quad_out = a * a + 2.0 * rho * a * b + b * b;
        let sigma_y2 = quad_out * p + v;
        let beta = self.gld.beta();
        let g_correct = beta * p * (a + rho * b) / s2;
        let g_compete = beta * p * (rho * a + b) / s2;
        let alpha = collective_exponent(self.rate, sigma_y2, p, s2, self.gld)
            .expect("positive scales by construction");
        gauss + (g_correct.max(alpha) - g_compete).max(0.0)
    }
}

/// Exact pairwise decoding exponent at codeword correlation `rho`,
/// including the collective contribution of the incorrect codewords at the
/// posterior denominator.
///
/// The infimum runs over the unconstrained representation
/// `Y = a X + b X' + V` (the feasibility of the underlying second-moment
/// matrix is automatic there); the search is a boxed grid with window zooms
/// and a rotated coordinate-descent polish, with box doubling on boundary
/// hits.
pub fn pairwise_exponent_full(rho: Rho, spec: &AwgnSpec, rate: f64) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(invalid(format!("rate must be >= 0, got {rate}")));
    }
    if spec.gld.is_deterministic() {
        return Err(invalid(
            "exact evaluator needs a finite decoder temperature",
        ));
    }
    let obj = FullObjective {
        rho: rho.value(),
        rate,
        p: spec.power,
        s2: spec.noise_var,
        gld: spec.gld,
    };
    let mut half = 5.0;
    for _expansion in 0..4 {
        let (value, at_edge) = minimize_box(&obj, half, spec.noise_var)?;
        if !at_edge {
            return Ok(value);
        }
        half *= 2.0;
    }
    Err(Error::NonConvergence(
        "pairwise exponent minimizer pinned to the search box".into(),
    ))
}

const GRID_N: usize = 17;
const V_GRID_N: usize = 17;
const ZOOM_LEVELS: usize = 4;
const POLISH_CYCLES: usize = 12;
const POLISH_TOL: f64 = 1e-10;

fn minimize_box(obj: &FullObjective, half: f64, s2: f64) -> Result<(f64, bool)> {
    let v_lo: f64 = 1e-6;
    let v_hi: f64 = 10.0 * s2;
    let lnv = |i: usize| {
        v_lo.ln() + (v_hi.ln() - v_lo.ln()) * i as f64 / (V_GRID_N - 1) as f64
    };

    // coarse grid
    let mut best = (0.0, 0.0, s2, f64::INFINITY);
    for ia in 0..GRID_N {
        let a = -half + 2.0 * half * ia as f64 / (GRID_N - 1) as f64;
        for ib in 0..GRID_N {
            let b = -half + 2.0 * half * ib as f64 / (GRID_N - 1) as f64;
            for iv in 0..V_GRID_N {
                let v = lnv(iv).exp();
                let f = obj.eval(a, b, v);
                if f < best.3 {
                    best = (a, b, v, f);
                }
            }
        }
    }
    // the union-bound stationary point is always a candidate
    {
        let bh = obj.gld.beta_hat();
        let f = obj.eval(1.0 - bh, bh, s2);
        if f < best.3 {
            best = (1.0 - bh, bh, s2, f);
        }
    }

    // window zooms around the incumbent
    let mut step_ab = 2.0 * half / (GRID_N - 1) as f64;
    let mut step_lnv = (v_hi.ln() - v_lo.ln()) / (V_GRID_N - 1) as f64;
    for _ in 0..ZOOM_LEVELS {
        let (a0, b0, v0, _) = best;
        let a_lo = (a0 - 2.0 * step_ab).max(-half);
        let b_lo = (b0 - 2.0 * step_ab).max(-half);
        let lv_lo = (v0.ln() - 2.0 * step_lnv).max(v_lo.ln());
        let a_hi = (a0 + 2.0 * step_ab).min(half);
        let b_hi = (b0 + 2.0 * step_ab).min(half);
        let lv_hi = (v0.ln() + 2.0 * step_lnv).min(v_hi.ln());
        for ia in 0..GRID_N {
            let a = a_lo + (a_hi - a_lo) * ia as f64 / (GRID_N - 1) as f64;
            for ib in 0..GRID_N {
                let b = b_lo + (b_hi - b_lo) * ib as f64 / (GRID_N - 1) as f64;
                for iv in 0..V_GRID_N {
                    let v = (lv_lo + (lv_hi - lv_lo) * iv as f64 / (V_GRID_N - 1) as f64).exp();
                    let f = obj.eval(a, b, v);
                    if f < best.3 {
                        best = (a, b, v, f);
                    }
                }
            }
        }
        step_ab = (a_hi - a_lo) / (GRID_N - 1) as f64;
        step_lnv = (lv_hi - lv_lo) / (V_GRID_N - 1) as f64;
    }

    // rotated coordinate descent: u = a + b, w = a - b, ln v. The kink of
    // the positive-part bracket runs along w, where a one-dimensional
    // golden pass is exact.
    let (mut a, mut b, mut v, mut f_cur) = best;
    let span = 8.0 * step_ab.max(1e-6);
    let mut last_improvement = f64::INFINITY;
    for _cycle in 0..POLISH_CYCLES {
        let f_before = f_cur;
        let u0 = a + b;
        let w0 = a - b;
        let (u1, _) = golden_min(
            |u| obj.eval(0.5 * (u + w0), 0.5 * (u - w0), v),
            u0 - span,
            u0 + span,
            1e-13,
        );
        let (w1, _) = golden_min(
            |w| obj.eval(0.5 * (u1 + w), 0.5 * (u1 - w), v),
            w0 - span,
            w0 + span,
            1e-13,
        );
        a = 0.5 * (u1 + w1);
        b = 0.5 * (u1 - w1);
        let (lv1, f1) = golden_min(
            |lv: f64| obj.eval(a, b, lv.exp()),
            (v.ln() - 1.0).max(v_lo.ln()),
            (v.ln() + 1.0).min(v_hi.ln()),
            1e-13,
        );
        v = lv1.exp();
        f_cur = f1;
        last_improvement = f_before - f_cur;
        if last_improvement < POLISH_TOL {
            break;
        }
    }
    if last_improvement > 1e-8 {
        return Err(Error::NonConvergence(
            "pairwise exponent refinement still moving after the cycle budget".into(),
        ));
    }
    if f_cur > best.3 {
        a = best.0;
        b = best.1;
        f_cur = best.3;
    }
    let at_edge = a.abs() > half - 2.0 * step_ab.max(1e-9) || b.abs() > half - 2.0 * step_ab.max(1e-9);
    Ok((f_cur, at_edge))
}

/// Exact TRC exponent: infimum over the rate-capped codeword correlation of
/// the full pairwise exponent plus the pair-population term, minus the rate.
pub fn trc_exponent(rate: f64, spec: &AwgnSpec) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(invalid(format!("rate must be >= 0, got {rate}")));
    }
    let cap = (1.0 - (-4.0 * rate).exp()).max(0.0).sqrt();
    let gamma = |rho: f64| -> Result<f64> {
        let g = pairwise_exponent_full(Rho::new(rho)?, spec, rate)?;
        Ok(g + 0.5 * (1.0 / (1.0 - rho * rho)).ln())
    };
    if cap < 1e-12 {
        return Ok(gamma(0.0)? - rate);
    }
    // grid across the cap, golden refinement around the incumbent
    let n = 33usize;
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let rho = -cap + 2.0 * cap * i as f64 / (n - 1) as f64;
        vals.push(gamma(rho.clamp(-cap + 1e-15, cap - 1e-15))?);
    }
    let mut ib = 0usize;
    for (i, v) in vals.iter().enumerate() {
        if *v < vals[ib] {
            ib = i;
        }
    }
    let step = 2.0 * cap / (n - 1) as f64;
    let center = -cap + step * ib as f64;
    let lo = (center - step).max(-cap + 1e-15);
    let hi = (center + step).min(cap - 1e-15);
    let (_, v) = golden_min(|rho| gamma(rho).unwrap_or(f64::INFINITY), lo, hi, 1e-10);
    Ok(v.min(vals[ib]) - rate)
}

/// Union-bound TRC exponent in closed form:
/// `c - sup_corr_gain(c, 2R) - R` with `c = beta_hat (1 - beta_hat) snr`,
/// which is `snr/4 (1 - sqrt(1 - e^(-4R))) + R` below the critical rate and
/// the tangent line of slope -1 above it.
pub fn trc_exponent_lower(rate: f64, spec: &AwgnSpec) -> Result<f64> {
    let c = spec.effective_quarter_snr();
    Ok(c - sup_corr_gain(c, 2.0 * rate)? - rate)
}

/// Critical rate of the union-bound curve, where the convex branch meets the
/// slope -1 line: `(1/4) ln((1 + sqrt(1 + 4 c^2)) / 2)` with
/// `c = beta_hat (1 - beta_hat) snr` (equal to `snr/4` for `beta >= 1/2`).
pub fn critical_rate(spec: &AwgnSpec) -> f64 {
    let c = spec.effective_quarter_snr();
    0.25 * ((1.0 + (1.0 + 4.0 * c * c).sqrt()) / 2.0).ln()
}

/// Intercept of the straight-line branch: `trc_exponent_lower(R*) + R*`.
pub fn r0_intercept(spec: &AwgnSpec) -> Result<f64> {
    let rs = critical_rate(spec);
    Ok(trc_exponent_lower(rs, spec)? + rs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::pairwise_exponent_lower;

    fn spec_snr2() -> AwgnSpec {
        AwgnSpec::new(2.0, 1.0, GldParams::new(1.0).unwrap()).unwrap()
    }

    #[test]
    fn full_exponent_vanishes_at_coinciding_codewords() {
        let spec = spec_snr2();
        let rho = Rho::new(1.0 - 1e-9).unwrap();
        let v = pairwise_exponent_full(rho, &spec, 0.1).unwrap();
        assert!(v.abs() < 1e-5, "{v}");
    }

    #[test]
    fn full_exponent_reduces_to_union_bound_when_collective_inactive() {
        // At low rate the collective term is below the correct-codeword gain
        // at the union-bound optimizer, so the exact value coincides with it.
        let spec = spec_snr2();
        let rho = Rho::new(0.0).unwrap();
        let v = pairwise_exponent_full(rho, &spec, 0.1).unwrap();
        let lower = pairwise_exponent_lower(rho, spec.snr(), spec.gld);
        assert!((v - lower).abs() < 1e-6, "{v} vs {lower}");
    }

    #[test]
    fn full_exponent_zero_rate_against_dense_grid() {
        let spec = spec_snr2();
        let rho = Rho::new(0.0).unwrap();
        let v = pairwise_exponent_full(rho, &spec, 0.0).unwrap();
        // independent coarse 4-d style grid (tilt handled analytically in
        // the objective itself): scan (a, b, v)
        let obj = FullObjective { rho: 0.0, rate: 0.0, p: 2.0, s2: 1.0, gld: spec.gld };
        let mut best = f64::INFINITY;
        for ia in 0..=120 {
            let a = -1.0 + 2.5 * ia as f64 / 120.0;
            for ib in 0..=120 {
                let b = -1.0 + 2.5 * ib as f64 / 120.0;
                for iv in 0..=20 {
                    let vv = 0.4 + 1.2 * iv as f64 / 20.0;
                    best = best.min(obj.eval(a, b, vv));
                }
            }
        }
        assert!(v <= best + 1e-6, "exact {v} vs grid {best}");
        let lower = pairwise_exponent_lower(rho, spec.snr(), spec.gld);
        assert!(v >= lower - 1e-6, "exact {v} vs union bound {lower}");
        assert!((v - 0.5).abs() < 1e-4, "zero-rate pairwise exponent {v}");
    }

    #[test]
    fn full_exponent_nondecreasing_in_rate() {
        let spec = spec_snr2();
        let rho = Rho::new(0.2).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..6 {
            let rate = 0.05 * k as f64;
            let v = pairwise_exponent_full(rho, &spec, rate).unwrap();
            assert!(v >= prev - 1e-7, "rate {rate}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn exact_trc_zero_rate_is_quarter_snr() {
        let spec = spec_snr2();
        let v = trc_exponent(0.0, &spec).unwrap();
        assert!((v - 0.5).abs() < 1e-4, "{v}");
    }

    #[test]
    fn lower_bound_examples() {
        let spec = spec_snr2();
        assert!((trc_exponent_lower(0.0, &spec).unwrap() - 0.5).abs() < 1e-12);

        // grid oracle at R = 0.1
        let rate = 0.1;
        let cap = (1.0 - (-4.0f64 * rate).exp()).sqrt();
        let mut o = f64::INFINITY;
        let n = 2_000_001usize;
        for i in 0..n {
            let rho = -cap + 2.0 * cap * i as f64 / (n - 1) as f64;
            let v = 0.5 * (1.0 - rho) - 0.5 * (1.0 - rho * rho).ln() - rate;
            if v < o {
                o = v;
            }
        }
        let got = trc_exponent_lower(rate, &spec).unwrap();
        assert!((got - o).abs() < 1e-6, "{got} vs {o}");
    }

    #[test]
    fn branches_agree_at_critical_rate() {
        let spec = spec_snr2();
        let rs = critical_rate(&spec);
        let snr = spec.snr();
        let convex = snr / 4.0 * (1.0 - (1.0 - (-4.0 * rs).exp()).sqrt()) + rs;
        let t = (1.0 + snr * snr / 4.0).sqrt();
        let line = snr / 4.0 - (snr * snr / 8.0) / (1.0 + t) + 0.5 * ((1.0 + t) / 2.0).ln() - rs;
        assert!((convex - line).abs() < 1e-10, "{convex} vs {line}");
        assert!((trc_exponent_lower(rs, &spec).unwrap() - convex).abs() < 1e-12);
    }

    #[test]
    fn critical_rate_values() {
        let zero = AwgnSpec::new(1e-14, 1.0, GldParams::new(1.0).unwrap()).unwrap();
        assert!(critical_rate(&zero) < 1e-13);
        let spec = spec_snr2();
        let want = 0.25 * ((1.0 + 2f64.sqrt()) / 2.0).ln();
        assert!((critical_rate(&spec) - want).abs() < 1e-14);
        // slope of the convex branch reaches -1 exactly at the critical rate
        let rs = critical_rate(&spec);
        let f = |r: f64| trc_exponent_lower(r, &spec).unwrap();
        let left = (f(rs) - f(rs - 1e-6)) / 1e-6;
        let right = (f(rs + 1e-6) - f(rs)) / 1e-6;
        assert!((left + 1.0).abs() < 1e-4, "left slope {left}");
        assert!((right + 1.0).abs() < 1e-9, "right slope {right}");
    }

    #[test]
    fn straight_line_beyond_critical_rate() {
        let spec = spec_snr2();
        let rs = critical_rate(&spec);
        let r0 = r0_intercept(&spec).unwrap();
        for k in 0..8 {
            let r = rs + 0.03 * k as f64;
            let v = trc_exponent_lower(r, &spec).unwrap();
            assert!((v - (r0 - r)).abs() < 1e-10, "r = {r}");
        }
    }

    #[test]
    fn lower_bound_convex_then_affine_and_dominated_by_exact() {
        let spec = spec_snr2();
        let f = |r: f64| trc_exponent_lower(r, &spec).unwrap();
        // e(r) + r nonincreasing, convexity on [0, r*]
        let rs = critical_rate(&spec);
        let mut prev = f64::INFINITY;
        for k in 0..=20 {
            let r = rs * k as f64 / 20.0;
            let v = f(r) + r;
            assert!(v <= prev + 1e-12);
            prev = v;
            if (1..20).contains(&k) {
                let h = rs / 20.0;
                let d2 = f(r + h) - 2.0 * f(r) + f(r - h);
                assert!(d2 >= -1e-8, "second difference {d2} at {r}");
            }
        }
        // lower bound never exceeds the exact value
        for &r in &[0.0, 0.02, 0.05, 0.1] {
            let lo = f(r);
            let ex = trc_exponent(r, &spec).unwrap();
            assert!(lo <= ex + 1e-4, "rate {r}: lower {lo} vs exact {ex}");
        }
    }

    #[test]
    fn low_temperature_lower_bound_uses_beta_hat() {
        let gld = GldParams::new(0.25).unwrap();
        let spec = AwgnSpec::new(2.0, 1.0, gld).unwrap();
        // zero-rate value is snr * beta(1-beta)
        let v = trc_exponent_lower(0.0, &spec).unwrap();
        assert!((v - 2.0 * 0.25 * 0.75).abs() < 1e-12);
    }

    #[test]
    fn regression_points_are_feasible_moments() {
        // every regression-form triple maps into the PSD-feasible region of
        // the second-moment matrix
        let mut state = 88172645463325252u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let rho = Rho::new(1.9 * next() - 0.95).unwrap();
            let p = 0.1 + 5.0 * next();
            let a = 6.0 * next() - 3.0;
            let b = 6.0 * next() - 3.0;
            let v = 0.01 + 3.0 * next();
            let pt = SearchPoint::from_regression(rho, p, a, b, v);
            assert!(pt.is_feasible(rho, p, 1e-10), "{pt:?}");
        }
        // an infeasible triple is rejected: correlations of 1 with distinct
        // codewords cannot coexist at small output variance
        let bad = SearchPoint { sigma_y2: 0.5, rho_xy: 1.0, rho_xpy: -1.0 };
        assert!(!bad.is_feasible(Rho::new(0.5).unwrap(), 1.0, 1e-10));
    }

    #[test]
    fn rejects_bad_inputs() {
        let gld = GldParams::new(1.0).unwrap();
        assert!(AwgnSpec::new(0.0, 1.0, gld).is_err());
        assert!(AwgnSpec::new(1.0, 0.0, gld).is_err());
        let spec = spec_snr2();
        assert!(trc_exponent(-0.1, &spec).is_err());
        let det = AwgnSpec::new(2.0, 1.0, GldParams::deterministic()).unwrap();
        assert!(pairwise_exponent_full(Rho::new(0.0).unwrap(), &det, 0.1).is_err());
    }
}
