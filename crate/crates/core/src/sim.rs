//! Desk-scale Monte Carlo of the coded parallel-Gaussian system: spherical
//! codeword segments, the stochastic exponential-weight decoder, and the two
//! exponent estimators (mean of the log error rate versus log of the mean).
//!
//! The simulator cannot reach the exponential regime at these block lengths;
//! its contract is ordering and trend checks, not numerical agreement with
//! the asymptotic curves. Randomness comes from per-purpose ChaCha streams
//! keyed by (seed, purpose, code index, trial index), so runs are bit
//! reproducible and trials can be evaluated in any order.

use crate::colored::ChannelSpec;
use crate::error::{invalid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::f64::consts::PI;

const MAX_MESSAGES: usize = 1 << 18;

/// Simulation parameters. The channel spectra are sampled at the `n` segment
/// frequencies `2π i / n`; the block length is `n * ell` and the codebook
/// holds `round(exp(N R))` messages.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n: usize,
    pub ell: usize,
    pub rate: f64,
    pub trials_codes: usize,
    pub trials_noise: usize,
    pub seed: u64,
    pub channel: ChannelSpec,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("need at least one parallel channel"));
        }
        if self.ell < 2 {
            return Err(invalid("segment length must be >= 2"));
        }
        if !(self.rate >= 0.0) {
            return Err(invalid("rate must be >= 0"));
        }
        if self.trials_codes == 0 || self.trials_noise == 0 {
            return Err(invalid("trial counts must be >= 1"));
        }
        self.message_count().map(|_| ())
    }

    pub fn block_len(&self) -> usize {
        self.n * self.ell
    }

    pub fn message_count(&self) -> Result<usize> {
        let m = (self.block_len() as f64 * self.rate).exp().round();
        if !(m >= 2.0) {
            return Err(invalid(format!(
                "rate {} gives {m} messages; need at least 2 for error events",
                self.rate
            )));
        }
        if m > MAX_MESSAGES as f64 {
            return Err(invalid(format!(
                "rate {} gives {m} messages, above the guard {MAX_MESSAGES}",
                self.rate
            )));
        }
        Ok(m as usize)
    }

    /// Per-segment (power, noise variance, decoder variance).
    pub fn segment_params(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let omega = |i: usize| 2.0 * PI * i as f64 / self.n as f64;
        let p = (0..self.n).map(|i| self.channel.sx().sample(omega(i))).collect();
        let s2 = (0..self.n).map(|i| self.channel.sz().sample(omega(i))).collect();
        let st2 = (0..self.n)
            .map(|i| self.channel.sz_tilde().sample(omega(i)))
            .collect();
        (p, s2, st2)
    }
}

#[derive(Debug, Clone, Copy)]
enum Purpose {
    Codebook = 1,
    Message = 2,
    Noise = 3,
    Decode = 4,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha stream keyed by seed, purpose and the (code, trial) counters.
fn stream(seed: u64, purpose: Purpose, code: u64, trial: u64) -> ChaCha8Rng {
    let mut key = splitmix(seed ^ (purpose as u64).wrapping_mul(0xA076_1D64_78BD_642F));
    key = splitmix(key ^ code.wrapping_mul(0xE703_7ED1_A0B4_28DB));
    key = splitmix(key ^ trial.wrapping_mul(0x8EBC_6AF0_9C88_C6E3));
    ChaCha8Rng::seed_from_u64(key)
}

/// Uniform draw on the sphere of squared radius `ell * power`: an isotropic
/// Gaussian vector rescaled to the exact energy.
pub fn sample_spherical_segment(ell: usize, power: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if power == 0.0 {
        return vec![0.0; ell];
    }
    loop {
        let g: Vec<f64> = (0..ell).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm2: f64 = g.iter().map(|x| x * x).sum();
        if norm2 > 0.0 {
            let scale = (ell as f64 * power / norm2).sqrt();
            return g.into_iter().map(|x| x * scale).collect();
        }
    }
}

/// A codeword is one spherical segment per parallel channel.
pub type Codeword = Vec<Vec<f64>>;

/// Draws the codebook of code index `code_idx` (reproducible: the same
/// config and index always give the same book).
pub fn draw_codebook(cfg: &SimConfig, code_idx: usize) -> Result<Vec<Codeword>> {
    cfg.validate()?;
    let m = cfg.message_count()?;
    let (p, _, _) = cfg.segment_params();
    let mut rng = stream(cfg.seed, Purpose::Codebook, code_idx as u64, 0);
    Ok((0..m)
        .map(|_| {
            (0..cfg.n)
                .map(|i| sample_spherical_segment(cfg.ell, p[i], &mut rng))
                .collect()
        })
        .collect())
}

fn correlation_score(codeword: &Codeword, received: &[Vec<f64>], st2: &[f64]) -> f64 {
    codeword
        .iter()
        .zip(received)
        .zip(st2)
        .map(|((x, y), v)| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / v)
        .sum()
}

/// Stochastic decoder: samples a message index with probability proportional
/// to `exp(beta * score)`, where the score is the mismatch-weighted
/// correlation. Infinite temperature decodes by maximum score with uniform
/// tie breaking; zero-temperature-like behavior (uniform choice) appears as
/// `beta -> 0`.
pub fn gld_decode(
    received: &[Vec<f64>],
    codebook: &[Codeword],
    gld: crate::scalar::GldParams,
    st2: &[f64],
    rng: &mut ChaCha8Rng,
) -> usize {
    debug_assert!(!codebook.is_empty());
    let scores: Vec<f64> = codebook
        .iter()
        .map(|cw| correlation_score(cw, received, st2))
        .collect();
    if gld.is_deterministic() {
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = scores
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == best)
            .map(|(i, _)| i)
            .collect();
        return ties[rng.random_range(0..ties.len())];
    }
    let beta = gld.beta();
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (beta * (s - top)).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Per-code empirical error rate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PerCode {
    pub pe: f64,
    pub errors: usize,
    /// No errors were observed; `pe` is the rule-of-three placeholder
    /// `1 / (3 * trials)` and the code is excluded from ordering claims.
    pub censored: bool,
}

/// The two exponent estimates with a normal-approximation confidence radius
/// on the log scale.
#[derive(Debug, Clone, Serialize)]
pub struct SimEstimate {
    pub trc_estimate: f64,
    pub rc_estimate: f64,
    pub ci_radius: f64,
    pub per_code: Vec<PerCode>,
    pub censored: bool,
}

/// Runs the full experiment: `trials_codes` independent codebooks, each
/// probed by `trials_noise` transmissions of uniformly drawn messages.
pub fn estimate_exponents(cfg: &SimConfig) -> Result<SimEstimate> {
    cfg.validate()?;
    let m = cfg.message_count()?;
    let (p, s2, st2) = cfg.segment_params();
    let n_block = cfg.block_len() as f64;
    let gld = cfg.channel.gld();
    let mut per_code = Vec::with_capacity(cfg.trials_codes);
    for code in 0..cfg.trials_codes {
        let book = {
            let mut rng = stream(cfg.seed, Purpose::Codebook, code as u64, 0);
            (0..m)
                .map(|_| {
                    (0..cfg.n)
                        .map(|i| sample_spherical_segment(cfg.ell, p[i], &mut rng))
                        .collect::<Codeword>()
                })
                .collect::<Vec<_>>()
        };
        let mut errors = 0usize;
        for trial in 0..cfg.trials_noise {
            let sent = stream(cfg.seed, Purpose::Message, code as u64, trial as u64)
                .random_range(0..m);
            let mut noise_rng = stream(cfg.seed, Purpose::Noise, code as u64, trial as u64);
            let received: Vec<Vec<f64>> = book[sent]
                .iter()
                .enumerate()
                .map(|(i, seg)| {
                    let sd = s2[i].sqrt();
                    seg.iter()
                        .map(|x| x + sd * noise_rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            let mut dec_rng = stream(cfg.seed, Purpose::Decode, code as u64, trial as u64);
            let decoded = gld_decode(&received, &book, gld, &st2, &mut dec_rng);
            if decoded != sent {
                errors += 1;
            }
        }
        let censored = errors == 0;
        let pe = if censored {
            1.0 / (3.0 * cfg.trials_noise as f64)
        } else {
            errors as f64 / cfg.trials_noise as f64
        };
        per_code.push(PerCode { pe, errors, censored });
    }
    let logs: Vec<f64> = per_code.iter().map(|c| c.pe.ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / logs.len() as f64;
    let mean_pe = per_code.iter().map(|c| c.pe).sum::<f64>() / per_code.len() as f64;
    let ci_radius = if logs.len() > 1 {
        let var = logs.iter().map(|l| (l - mean_log).powi(2)).sum::<f64>()
            / (logs.len() - 1) as f64;
        1.96 * (var / logs.len() as f64).sqrt() / n_block
    } else {
        0.0
    };
    Ok(SimEstimate {
        trc_estimate: -mean_log / n_block,
        rc_estimate: -mean_pe.ln() / n_block,
        ci_radius,
        censored: per_code.iter().any(|c| c.censored),
        per_code,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GldParams;

    fn flat_channel(power: f64, noise: f64, beta: f64) -> ChannelSpec {
        ChannelSpec::flat_matched(power, noise, 64, GldParams::new(beta).unwrap()).unwrap()
    }

    fn config(n: usize, ell: usize, rate: f64, beta: f64, seed: u64) -> SimConfig {
        SimConfig {
            n,
            ell,
            rate,
            trials_codes: 4,
            trials_noise: 400,
            seed,
            channel: flat_channel(2.0, 1.0, beta),
        }
    }

    #[test]
    fn spherical_segments_have_exact_energy() {
        let mut rng = stream(7, Purpose::Codebook, 0, 0);
        for &power in &[0.5, 2.0, 9.0] {
            let x = sample_spherical_segment(16, power, &mut rng);
            let e: f64 = x.iter().map(|v| v * v).sum();
            assert!((e - 16.0 * power).abs() < 1e-12 * 16.0 * power);
        }
        let z = sample_spherical_segment(8, 0.0, &mut rng);
        assert!(z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn spherical_statistics() {
        let ell = 8;
        let draws = 100_000usize;
        let mut rng = stream(11, Purpose::Codebook, 1, 0);
        let mut mean = vec![0.0f64; ell];
        let mut sq: Vec<Vec<f64>> = Vec::with_capacity(draws);
        for _ in 0..draws {
            let x = sample_spherical_segment(ell, 1.0, &mut rng);
            for (m, v) in mean.iter_mut().zip(&x) {
                *m += v;
            }
            sq.push(x.iter().map(|v| v * v).collect());
        }
        // per-coordinate variance on the unit-power sphere is the power
        let sd = 1.0f64;
        for m in &mean {
            let avg = m / draws as f64;
            assert!(avg.abs() < 4.0 * sd / (draws as f64).sqrt(), "{avg}");
        }
        // squared coordinates on the sphere are negatively correlated,
        // with correlation -1/(ell-1)
        let col = |j: usize| sq.iter().map(|r| r[j]).collect::<Vec<f64>>();
        let (a, b) = (col(0), col(1));
        let ma = a.iter().sum::<f64>() / draws as f64;
        let mb = b.iter().sum::<f64>() / draws as f64;
        let cov = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / draws as f64;
        let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / draws as f64;
        let vb = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / draws as f64;
        let corr = cov / (va * vb).sqrt();
        let want = -1.0 / (ell as f64 - 1.0);
        assert!((corr - want).abs() < 0.02, "corr {corr} vs {want}");
    }

    #[test]
    fn decoder_uniform_at_zero_temperature() {
        let cfg = config(2, 4, 0.21, 1.0, 3);
        let book = draw_codebook(&cfg, 0).unwrap();
        let m = book.len();
        let st2 = vec![1.0; 2];
        let y = vec![vec![0.3, -0.1, 0.2, 0.0], vec![0.1, 0.4, -0.2, 0.6]];
        let gld = GldParams::new(1e-300).unwrap();
        let mut counts = vec![0usize; m];
        for t in 0..20_000 {
            let mut rng = stream(5, Purpose::Decode, 0, t);
            counts[gld_decode(&y, &book, gld, &st2, &mut rng)] += 1;
        }
        let expect = 20_000.0 / m as f64;
        for c in &counts {
            assert!((*c as f64 - expect).abs() < 5.0 * expect.sqrt(), "{counts:?}");
        }
    }

    #[test]
    fn decoder_recovers_transmitted_codeword_noiselessly() {
        let cfg = config(2, 6, 0.1, 1.0, 9);
        let book = draw_codebook(&cfg, 0).unwrap();
        let st2 = vec![1.0; 2];
        let det = GldParams::deterministic();
        for (m, cw) in book.iter().enumerate().take(8) {
            let mut rng = stream(1, Purpose::Decode, 0, m as u64);
            assert_eq!(gld_decode(cw, &book, det, &st2, &mut rng), m);
        }
    }

    #[test]
    fn decoder_sampling_matches_softmax() {
        // chi-square goodness of fit on a 4-codeword book at one received y
        let channel = flat_channel(2.0, 1.0, 0.7);
        let cfg = SimConfig {
            n: 1,
            ell: 8,
            rate: (4.0f64).ln() / 8.0,
            trials_codes: 1,
            trials_noise: 1,
            seed: 21,
            channel,
        };
        let book = draw_codebook(&cfg, 0).unwrap();
        assert_eq!(book.len(), 4);
        let st2 = vec![1.0];
        let y = vec![vec![0.5, -0.2, 0.8, 0.1, -0.4, 0.3, 0.0, 0.6]];
        let gld = GldParams::new(0.7).unwrap();
        let scores: Vec<f64> = book
            .iter()
            .map(|cw| correlation_score(cw, &y, &st2))
            .collect();
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = scores.iter().map(|s| (0.7 * (s - top)).exp()).collect();
        let total: f64 = w.iter().sum();
        let draws = 100_000usize;
        let mut counts = vec![0usize; 4];
        for t in 0..draws {
            let mut rng = stream(33, Purpose::Decode, 0, t as u64);
            counts[gld_decode(&y, &book, gld, &st2, &mut rng)] += 1;
        }
        let mut chi2 = 0.0;
        for (c, wi) in counts.iter().zip(&w) {
            let e = draws as f64 * wi / total;
            chi2 += (*c as f64 - e).powi(2) / e;
        }
        // 1% upper quantile of chi-square with 3 degrees of freedom
        assert!(chi2 < 11.345, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn zero_temperature_estimates_hit_uniform_error_rate() {
        let mut cfg = config(2, 4, 0.21, 1e-12, 4);
        cfg.trials_codes = 6;
        cfg.trials_noise = 2000;
        let m = cfg.message_count().unwrap() as f64;
        let n = cfg.block_len() as f64;
        let est = estimate_exponents(&cfg).unwrap();
        let target = -((m - 1.0) / m).ln() / n;
        assert!(
            (est.trc_estimate - target).abs() <= 3.0 * est.ci_radius + 1e-4,
            "trc {} vs {target} (ci {})",
            est.trc_estimate,
            est.ci_radius
        );
        assert!(
            (est.rc_estimate - target).abs() <= 3.0 * est.ci_radius + 1e-4,
            "rc {} vs {target}",
            est.rc_estimate
        );
    }

    #[test]
    fn jensen_ordering_and_reproducibility() {
        let cfg = config(4, 8, 0.05, 1.0, 77);
        let a = estimate_exponents(&cfg).unwrap();
        let b = estimate_exponents(&cfg).unwrap();
        assert_eq!(a.trc_estimate, b.trc_estimate);
        assert_eq!(a.rc_estimate, b.rc_estimate);
        for (x, y) in a.per_code.iter().zip(&b.per_code) {
            assert_eq!(x.pe, y.pe);
        }
        assert!(a.trc_estimate >= a.rc_estimate - 2.0 * a.ci_radius);
    }

    #[test]
    fn error_rate_matches_pairwise_quadrature() {
        // two codewords on one channel: the exact stochastic-decoder error
        // rate is a one-dimensional Gaussian integral along the codeword
        // difference; moderate snr keeps the event common enough to count
        let channel = flat_channel(0.25, 1.0, 2.0);
        let ell = 8usize;
        let cfg = SimConfig {
            n: 1,
            ell,
            rate: (2.0f64).ln() / ell as f64,
            trials_codes: 1,
            trials_noise: 40_000,
            seed: 13,
            channel,
        };
        assert_eq!(cfg.message_count().unwrap(), 2);
        let book = draw_codebook(&cfg, 0).unwrap();
        let (p, s2, st2) = cfg.segment_params();
        let lp = ell as f64 * p[0];
        let cross: f64 = book[0][0].iter().zip(&book[1][0]).map(|(a, b)| a * b).sum();
        let d2 = 2.0 * (lp - cross);
        let beta = 2.0;
        let pe_oracle = {
            // E_u sigmoid(beta ((C - lP) + ||d|| sigma u) / st2)
            let sd = s2[0].sqrt() * d2.sqrt();
            let f = |u: f64| {
                let t = beta * ((cross - lp) + sd * u) / st2[0];
                (-u * u / 2.0).exp() / (2.0 * PI).sqrt() / (1.0 + (-t).exp())
            };
            let (a, b, n) = (-10.0, 10.0, 20_000usize);
            let h = (b - a) / n as f64;
            let mut acc = f(a) + f(b);
            for i in 1..n {
                acc += 2.0 * f(a + i as f64 * h);
            }
            acc * h / 2.0
        };
        let est = estimate_exponents(&cfg).unwrap();
        let phat = est.per_code[0].pe;
        let radius = (pe_oracle * (1.0 - pe_oracle) / cfg.trials_noise as f64).sqrt();
        assert!(
            (phat - pe_oracle).abs() <= 3.0 * radius,
            "simulated {phat} vs quadrature {pe_oracle} (radius {radius})"
        );
    }

    #[test]
    fn estimates_trend_down_with_rate() {
        let lo = estimate_exponents(&config(2, 8, 0.05, 1.0, 50)).unwrap();
        let hi = estimate_exponents(&config(2, 8, 0.25, 1.0, 50)).unwrap();
        let slack = 2.0 * (lo.ci_radius + hi.ci_radius) + 1e-3;
        assert!(hi.trc_estimate <= lo.trc_estimate + slack);
        assert!(hi.rc_estimate <= lo.rc_estimate + slack);
    }

    #[test]
    fn config_guards() {
        let mut cfg = config(2, 4, 0.0, 1.0, 1);
        assert!(cfg.message_count().is_err(), "one message cannot err");
        cfg.rate = 10.0;
        assert!(cfg.message_count().is_err(), "guard on the codebook size");
        cfg.rate = 0.21;
        cfg.ell = 1;
        assert!(cfg.validate().is_err());
    }
}
