//! Scalar search primitives shared by the exponent evaluators.
//!
//! Everything here is deterministic: fixed grids, golden-section refinement
//! and geometric bracket growth, so repeated runs produce identical output.

const PHI_COMP: f64 = 0.381_966_011_250_105_2; // 2 - golden ratio

/// Golden-section minimum of `f` on `[a, b]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    if b < a {
        std::mem::swap(&mut a, &mut b);
    }
    let mut x1 = a + PHI_COMP * (b - a);
    let mut x2 = b - PHI_COMP * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..256 {
        if (b - a).abs() <= tol * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + PHI_COMP * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - PHI_COMP * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Golden-section maximum of `f` on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, neg) = golden_min(|x| -f(x), a, b, tol);
    (x, -neg)
}

/// Uniform scan for a minimum; returns `(index, x, f(x))`.
pub(crate) fn scan_min(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> (usize, f64, f64) {
    debug_assert!(n >= 2);
    let step = (b - a) / (n - 1) as f64;
    let mut best = (0usize, a, f(a));
    for i in 1..n {
        let x = a + step * i as f64;
        let v = f(x);
        if v < best.2 {
            best = (i, x, v);
        }
    }
    best
}

pub(crate) fn scan_max(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> (usize, f64, f64) {
    let (i, x, v) = scan_min(|x| -f(x), a, b, n);
    (i, x, -v)
}

/// Values of a scan used for unimodality diagnostics.
///
/// Flags profiles with at least two strict local maxima whose heights differ
/// by more than `tol`; plateau-level noise below `tol` is not flagged.
pub(crate) fn has_multiple_maxima(values: &[f64], tol: f64) -> bool {
    let n = values.len();
    if n < 3 {
        return false;
    }
    let mut peaks: Vec<f64> = Vec::new();
    for i in 1..n - 1 {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] {
            peaks.push(values[i]);
        }
    }
    if values[0] > values[1] {
        peaks.push(values[0]);
    }
    if values[n - 1] > values[n - 2] {
        peaks.push(values[n - 1]);
    }
    if peaks.len() < 2 {
        return false;
    }
    peaks.sort_by(|a, b| b.partial_cmp(a).unwrap());
    peaks[0] - peaks[1] > tol
}

/// Maximum of `f` on `[0, hi]` with a coarse scan, a unimodality check and a
/// fine-grid fallback (absolute step `fine_step`) when the scan is not
/// unimodal. Returns `(x, value, multimodal)`.
pub(crate) fn sup_scan_golden(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    coarse: usize,
    fine_step: f64,
) -> (f64, f64, bool) {
    if hi <= lo {
        let v = f(lo);
        return (lo, v, false);
    }
    let step = (hi - lo) / (coarse - 1) as f64;
    let values: Vec<f64> = (0..coarse).map(|i| f(lo + step * i as f64)).collect();
    let mut ib = 0usize;
    for (i, v) in values.iter().enumerate() {
        if *v > values[ib] {
            ib = i;
        }
    }
    let multimodal = has_multiple_maxima(&values, 1e-8);
    let (wl, wh) = if multimodal {
        let n = (((hi - lo) / fine_step).ceil() as usize + 1).clamp(2, 400_000);
        let (j, xj, _) = scan_max(&f, lo, hi, n);
        let fs = (hi - lo) / (n - 1) as f64;
        let _ = j;
        ((xj - fs).max(lo), (xj + fs).min(hi))
    } else {
        let xb = lo + step * ib as f64;
        ((xb - step).max(lo), (xb + step).min(hi))
    };
    let (x, v) = golden_max(&f, wl, wh, 1e-13);
    (x, v, multimodal)
}

/// Concave-style maximum over `[start, ∞)`: geometric ladder until the
/// objective falls off, then a golden pass around the incumbent.
/// Returns `(x, value)`.
pub(crate) fn sup_growing(
    f: impl Fn(f64) -> f64,
    start: f64,
    factor: f64,
    cap: f64,
) -> (f64, f64) {
    let f0 = f(start);
    let mut best = (start, f0);
    let mut prev = f0;
    let mut x = start;
    let mut drops = 0;
    let mut hi = start;
    while x < cap {
        x *= factor;
        let v = f(x);
        hi = x;
        if v > best.1 {
            best = (x, v);
        }
        if v < prev {
            drops += 1;
            if drops >= 2 {
                break;
            }
        } else {
            drops = 0;
        }
        prev = v;
    }
    let lo = (best.0 / (factor * factor)).max(start);
    let hb = (best.0 * factor * factor).min(hi.max(start * factor));
    let (xg, vg) = golden_max(|t: f64| f(t.exp()), lo.ln(), hb.ln(), 1e-13);
    let mut out = (xg.exp(), vg);
    if best.1 > out.1 {
        out = best;
    }
    if f0 >= out.1 {
        out = (start, f0);
    }
    out
}

/// Central difference with one Richardson step: uses step sizes `h` and `h/2`.
pub(crate) fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |hh: f64| (f(x + hh) - f(x - hh)) / (2.0 * hh);
    let d1 = d(h);
    let d2 = d(h / 2.0);
    (4.0 * d2 - d1) / 3.0
}

/// Bisection for `f(x) = target` with `f` nondecreasing on `[lo, hi]`.
pub(crate) fn bisect_increasing(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    tol: f64,
) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}
