//! Error exponents of typical random codes over AWGN and colored Gaussian
//! channels under a stochastic, possibly mismatched, likelihood decoder.
//!
//! The crate provides:
//! - closed-form scalar kernels ([`scalar`]),
//! - the exact AWGN exponent evaluator and its closed-form lower bound
//!   ([`awgn`]),
//! - spectra, Toeplitz matrices and the eigenvalue-distribution check
//!   ([`spectral`]),
//! - the colored-channel exponent curve ([`colored`]),
//! - water-pouring optimization of the input spectrum ([`waterpour`]),
//! - the guaranteed-tightness rate analysis ([`tightness`]),
//! - a small Monte Carlo simulator of the coded system ([`sim`]).

// validations use `!(x > 0.0)` so that NaN is rejected together with the
// out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod awgn;
pub mod colored;
pub mod error;
mod optim;
pub mod scalar;
pub mod sim;
pub mod spectral;
pub mod tightness;
pub mod waterpour;

pub use colored::{ChannelSpec, ExponentCurve, ExponentPoint};
pub use error::{Error, Result};
pub use scalar::{GldParams, PairGeometry, Rho};
pub use sim::{SimConfig, SimEstimate};
pub use spectral::{AutocorrSeq, Spectrum, SpectrumSpec};
pub use tightness::TightnessReport;
pub use waterpour::WaterPouringSolution;
