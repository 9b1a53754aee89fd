//! JSON run configuration: one file drives every subcommand. Unknown keys
//! are rejected and configurations round-trip through serialization.

use serde::{Deserialize, Serialize};
use trc_core::spectral::{Spectrum, SpectrumSpec};
use trc_core::{ChannelSpec, GldParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelConfig,
    pub beta: BetaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evd: Option<EvdSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waterpour: Option<WaterpourSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub power: f64,
    pub noise: SpectrumSpec,
    pub mismatch: MismatchSpec,
    pub input: InputSpec,
}

/// Either the literal `"matched"` or an explicit decoder-assumed spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MismatchSpec {
    Keyword(String),
    Spec(SpectrumSpec),
}

/// Either the literal `"flat"` or an explicit input spectrum (rescaled to
/// the power constraint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSpec {
    Keyword(String),
    Spec(SpectrumSpec),
}

/// Decoder temperature: a positive number or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Value(f64),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl RateGrid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        if self.count < 1 {
            return Err("rates.count must be >= 1".into());
        }
        if !(self.min >= 0.0) || self.max < self.min {
            return Err("need 0 <= rates.min <= rates.max".into());
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        Ok((0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub n: usize,
    pub ell: usize,
    pub rate: f64,
    pub trials_codes: usize,
    pub trials_noise: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvdSection {
    pub n_list: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaterpourSection {
    pub rate: f64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        match &self.beta {
            BetaSpec::Value(v) if *v > 0.0 => {}
            BetaSpec::Keyword(k) if k == "inf" => {}
            BetaSpec::Value(v) => return Err(format!("beta must be > 0, got {v}")),
            BetaSpec::Keyword(k) => return Err(format!("beta must be a number or \"inf\", got \"{k}\"")),
        }
        if let MismatchSpec::Keyword(k) = &self.channel.mismatch {
            if k != "matched" {
                return Err(format!("channel.mismatch must be \"matched\" or a spectrum, got \"{k}\""));
            }
        }
        if let InputSpec::Keyword(k) = &self.channel.input {
            if k != "flat" {
                return Err(format!("channel.input must be \"flat\" or a spectrum, got \"{k}\""));
            }
        }
        if !(self.channel.power > 0.0) {
            return Err(format!("channel.power must be > 0, got {}", self.channel.power));
        }
        Ok(())
    }

    pub fn gld(&self) -> Result<GldParams, String> {
        match &self.beta {
            BetaSpec::Value(v) => GldParams::new(*v).map_err(|e| e.to_string()),
            BetaSpec::Keyword(_) => Ok(GldParams::deterministic()),
        }
    }

    /// Builds the channel on `grid` bins. A shaped input spectrum is
    /// rescaled so its mean meets the power constraint exactly.
    pub fn channel(&self, grid: usize) -> Result<ChannelSpec, String> {
        let power = self.channel.power;
        let sz = self.channel.noise.build(grid).map_err(|e| e.to_string())?;
        let sz_tilde = match &self.channel.mismatch {
            MismatchSpec::Keyword(_) => sz.clone(),
            MismatchSpec::Spec(s) => s.build(grid).map_err(|e| e.to_string())?,
        };
        let sx = match &self.channel.input {
            InputSpec::Keyword(_) => Spectrum::constant(power, grid).map_err(|e| e.to_string())?,
            InputSpec::Spec(s) => {
                let raw = s.build(grid).map_err(|e| e.to_string())?;
                let mean = raw.mean();
                if !(mean > 0.0) {
                    return Err("channel.input has zero mean power".into());
                }
                raw.scaled(power / mean).map_err(|e| e.to_string())?
            }
        };
        ChannelSpec::new(sx, sz, sz_tilde, power, self.gld()?).map_err(|e| e.to_string())
    }

    /// Mismatch ratio spectrum `S_Z / S~_Z` used by the water-pouring
    /// subcommand.
    pub fn mu_spectrum(&self, grid: usize) -> Result<Spectrum, String> {
        let ch = self.channel(grid)?;
        let values = ch.mu();
        Spectrum::new(values).map_err(|e| e.to_string())
    }
}
