//! Power spectra on a uniform frequency grid, Toeplitz autocorrelation
//! matrices, a cyclic-Jacobi symmetric eigensolver, and the numerical check
//! of the eigenvalue distribution theorem: averages of a continuous function
//! over the Toeplitz eigenvalues converge to the spectral integral of that
//! function.

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_GRID: usize = 4096;
const MIN_GRID: usize = 8;

/// Nonnegative spectrum sampled uniformly on `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_GRID {
            return Err(invalid(format!(
                "spectrum grid must have at least {MIN_GRID} samples, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("spectrum samples must be finite and >= 0"));
        }
        Ok(Self { values })
    }

    pub fn constant(level: f64, grid: usize) -> Result<Self> {
        Self::new(vec![level; grid])
    }

    /// Unit-lag-geometric spectrum with process variance `sigma_w2`:
    /// `sigma_w2 (1 - a^2) / (1 - 2 a cos w + a^2)`, so that the zero-lag
    /// autocorrelation equals `sigma_w2` and `r(k) = sigma_w2 a^|k|`.
    pub fn ar1(a: f64, sigma_w2: f64, grid: usize) -> Result<Self> {
        if a.abs() >= 1.0 {
            return Err(invalid(format!("ar(1) pole must satisfy |a| < 1, got {a}")));
        }
        if !(sigma_w2 > 0.0) {
            return Err(invalid(format!("process variance must be > 0, got {sigma_w2}")));
        }
        Self::from_symmetric_fn(grid, |w| {
            sigma_w2 * (1.0 - a * a) / (1.0 - 2.0 * a * w.cos() + a * a)
        })
    }

    /// Two-level spectrum: `high` on the fraction of the band nearest zero
    /// frequency (symmetric around DC), `low` elsewhere.
    pub fn two_level(low: f64, high: f64, high_fraction: f64, grid: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&high_fraction) {
            return Err(invalid(format!(
                "high_fraction must lie in [0, 1], got {high_fraction}"
            )));
        }
        if low < 0.0 || high < 0.0 {
            return Err(invalid("two-level values must be >= 0"));
        }
        Self::from_symmetric_fn(grid, |w| {
            let d = w.min(2.0 * PI - w);
            if d < high_fraction * PI {
                high
            } else {
                low
            }
        })
    }

    /// Spectrum implied by a finite symmetric autocorrelation sequence:
    /// `r(0) + 2 sum_k r(k) cos(k w)`.
    pub fn from_autocorr(r: &AutocorrSeq, grid: usize) -> Result<Self> {
        let s = Self::from_symmetric_fn(grid, |w| {
            let mut v = r.lags[0];
            for (k, rk) in r.lags.iter().enumerate().skip(1) {
                v += 2.0 * rk * (k as f64 * w).cos();
            }
            v
        });
        match s {
            Ok(s) => Ok(s),
            Err(_) => Err(invalid(
                "autocorrelation sequence does not define a nonnegative spectrum on this grid",
            )),
        }
    }

    // Evaluates on the half grid and mirrors, so that bins k and n-k carry
    // bit-identical values and quadrature nodes can be folded.
    fn from_symmetric_fn(grid: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if grid < MIN_GRID {
            return Err(invalid(format!(
                "spectrum grid must have at least {MIN_GRID} samples, got {grid}"
            )));
        }
        let mut values = vec![0.0; grid];
        for (k, v) in values.iter_mut().enumerate().take(grid / 2 + 1) {
            *v = f(2.0 * PI * k as f64 / grid as f64);
        }
        for k in grid / 2 + 1..grid {
            values[k] = values[grid - k];
        }
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn omega(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.len() as f64
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.min_value() > 0.0
    }

    /// Mean value, i.e. `spectral_mean` with the identity function.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Periodic linear interpolation at angular frequency `omega`.
    pub fn sample(&self, omega: f64) -> f64 {
        let n = self.len() as f64;
        let t = (omega.rem_euclid(2.0 * PI)) / (2.0 * PI) * n;
        let i0 = t.floor() as usize % self.len();
        let i1 = (i0 + 1) % self.len();
        let frac = t - t.floor();
        self.values[i0] * (1.0 - frac) + self.values[i1] * frac
    }

    pub fn resample(&self, grid: usize) -> Result<Self> {
        let values = (0..grid)
            .map(|k| self.sample(2.0 * PI * k as f64 / grid as f64))
            .collect();
        Self::new(values)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }

    pub(crate) fn is_mirror_symmetric(&self) -> bool {
        let n = self.len();
        (1..n).all(|k| self.values[k] == self.values[n - k])
    }
}

/// `(1/2π) ∫ G(S(w)) dw` by the trapezoid rule.
///
/// On a uniform full-period grid the trapezoid rule wraps around and reduces
/// to the plain sample mean; it is exact for constants and spectrally
/// accurate for smooth spectra.
pub fn spectral_mean(s: &Spectrum, g: impl Fn(f64) -> f64) -> f64 {
    s.values.iter().map(|v| g(*v)).sum::<f64>() / s.len() as f64
}

/// Finite symmetric autocorrelation sequence `r(0), r(1), ..., r(K)` with
/// `r(-k) = r(k)` and `r(0) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrSeq {
    lags: Vec<f64>,
}

impl AutocorrSeq {
    pub fn new(lags: Vec<f64>) -> Result<Self> {
        if lags.is_empty() || !(lags[0] > 0.0) {
            return Err(invalid("autocorrelation needs r(0) > 0"));
        }
        if lags.iter().any(|v| !v.is_finite()) {
            return Err(invalid("autocorrelation lags must be finite"));
        }
        Ok(Self { lags })
    }

    /// Geometric lags `r(k) = sigma_w2 a^k` truncated at `max_lag`.
    pub fn geometric(a: f64, sigma_w2: f64, max_lag: usize) -> Result<Self> {
        if a.abs() >= 1.0 {
            return Err(invalid(format!("geometric ratio must satisfy |a| < 1, got {a}")));
        }
        Self::new((0..=max_lag).map(|k| sigma_w2 * a.powi(k as i32)).collect())
    }

    /// Geometric lags truncated where `|a|^K` drops below 1e-12.
    pub fn ar1(a: f64, sigma_w2: f64) -> Result<Self> {
        let max_lag = if a == 0.0 {
            0
        } else {
            ((-12.0 * std::f64::consts::LN_10) / a.abs().ln()).ceil() as usize
        };
        Self::geometric(a, sigma_w2, max_lag)
    }

    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    pub fn value(&self, lag: usize) -> f64 {
        self.lags.get(lag).copied().unwrap_or(0.0)
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = f(i, j);
            }
        }
        Self { n, data }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Toeplitz autocorrelation matrix of order `n`: entry `(k, l)` is
/// `r(|k - l|)`, zero beyond the stored lags.
pub fn toeplitz_from_autocorr(r: &AutocorrSeq, n: usize) -> SymMatrix {
    SymMatrix::from_fn(n, |i, j| r.value(i.abs_diff(j)))
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// ascending. Terminates when the off-diagonal norm falls below
/// `1e-12 * frobenius`; gives up after 50 sweeps.
pub fn sym_eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    let n = m.order();
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = m
        .data
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if m.max_abs_asymmetry() > 1e-12 * scale.max(1.0) {
        return Err(Error::Eigensolver("matrix is not symmetric".into()));
    }
    let mut a = m.data.clone();
    let fro = m.frobenius();
    if fro == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let threshold = 1e-12 * fro;
    let idx = |i: usize, j: usize| i * n + j;
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * a[idx(i, j)] * a[idx(i, j)];
            }
        }
        s.sqrt()
    };
    let mut converged = off_norm(&a) <= threshold;
    for _ in 0..50 {
        if converged {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[idx(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[idx(q, q)] - a[idx(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e154 {
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[idx(p, p)] -= t * apq;
                a[idx(q, q)] += t * apq;
                a[idx(p, q)] = 0.0;
                a[idx(q, p)] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[idx(i, p)];
                    let aiq = a[idx(i, q)];
                    let new_ip = aip - s * (aiq + tau * aip);
                    let new_iq = aiq + s * (aip - tau * aiq);
                    a[idx(i, p)] = new_ip;
                    a[idx(p, i)] = new_ip;
                    a[idx(i, q)] = new_iq;
                    a[idx(q, i)] = new_iq;
                }
            }
        }
        converged = off_norm(&a) <= threshold;
    }
    if !converged {
        return Err(Error::Eigensolver(format!(
            "jacobi sweeps exhausted at order {n}"
        )));
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[idx(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eig)
}

/// Test functions for the eigenvalue-distribution check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckFn {
    Identity,
    Square,
    Log,
}

impl CheckFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CheckFn::Identity => x,
            CheckFn::Square => x * x,
            CheckFn::Log => x.ln(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CheckFn::Identity => "x",
            CheckFn::Square => "x^2",
            CheckFn::Log => "ln(x)",
        }
    }
}

/// One eigenvalue-distribution comparison: `(1/n) sum G(eig_i)` against
/// `(1/2π) ∫ G(S(w)) dw`.
#[derive(Debug, Clone, Serialize)]
pub struct ToeplitzCheckReport {
    pub n: usize,
    pub g: CheckFn,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Runs the eigenvalue-distribution comparison for each matrix order in
/// `n_list` and each test function, against the spectrum implied by the
/// autocorrelation sequence on the default grid.
pub fn evd_check(
    r: &AutocorrSeq,
    n_list: &[usize],
    fns: &[CheckFn],
) -> Result<Vec<ToeplitzCheckReport>> {
    let spectrum = Spectrum::from_autocorr(r, DEFAULT_GRID)?;
    if fns.contains(&CheckFn::Log) && !spectrum.is_strictly_positive() {
        return Err(invalid("log check needs a strictly positive spectrum"));
    }
    let mut reports = Vec::new();
    for &n in n_list {
        if n == 0 {
            return Err(invalid("matrix order must be >= 1"));
        }
        let eig = sym_eigenvalues(&toeplitz_from_autocorr(r, n))?;
        for g in fns {
            if *g == CheckFn::Log && eig[0] <= 0.0 {
                return Err(Error::Eigensolver(format!(
                    "nonpositive eigenvalue {} at order {n} under log check",
                    eig[0]
                )));
            }
            let lhs = eig.iter().map(|x| g.eval(*x)).sum::<f64>() / n as f64;
            let rhs = spectral_mean(&spectrum, |x| g.eval(x));
            reports.push(ToeplitzCheckReport {
                n,
                g: *g,
                lhs,
                rhs,
                gap: (lhs - rhs).abs(),
            });
        }
    }
    Ok(reports)
}

/// Spectrum families accepted in JSON configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumSpec {
    White { level: f64 },
    Ar1 { a: f64, sigma_w2: f64 },
    TwoLevel { low: f64, high: f64, high_fraction: f64 },
    Tabulated { values: Vec<f64> },
}

impl SpectrumSpec {
    pub fn build(&self, grid: usize) -> Result<Spectrum> {
        match self {
            SpectrumSpec::White { level } => Spectrum::constant(*level, grid),
            SpectrumSpec::Ar1 { a, sigma_w2 } => Spectrum::ar1(*a, *sigma_w2, grid),
            SpectrumSpec::TwoLevel { low, high, high_fraction } => {
                Spectrum::two_level(*low, *high, *high_fraction, grid)
            }
            SpectrumSpec::Tabulated { values } => {
                let s = Spectrum::new(values.clone())?;
                if s.len() == grid {
                    Ok(s)
                } else {
                    s.resample(grid)
                }
            }
        }
    }

    /// Lags of the implied autocorrelation sequence, used by the
    /// eigenvalue-distribution check. Closed form for white and geometric
    /// spectra, numerical inverse transform otherwise.
    pub fn autocorr(&self, grid: usize) -> Result<AutocorrSeq> {
        match self {
            SpectrumSpec::White { level } => AutocorrSeq::new(vec![*level]),
            SpectrumSpec::Ar1 { a, sigma_w2 } => AutocorrSeq::ar1(*a, *sigma_w2),
            _ => {
                let s = self.build(grid)?;
                let n = s.len();
                let max_lag = (n / 8).max(64).min(n - 1);
                let lags: Vec<f64> = (0..=max_lag)
                    .map(|k| {
                        (0..n)
                            .map(|j| s.values()[j] * (k as f64 * s.omega(j)).cos())
                            .sum::<f64>()
                            / n as f64
                    })
                    .collect();
                AutocorrSeq::new(lags)
            }
        }
    }
}
