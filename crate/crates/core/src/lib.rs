//! Optical OFDM over single-photon avalanche diode (SPAD) array receivers.
//!
//! * [`ofdm`]: DCO/ACO-OFDM transmitter and receiver baseband.
//! * [`spad`]: photon flux, dead-time transfer, exact count distributions and
//!   sampling, plus an event-level oracle.
//! * [`analysis`]: closed-form BER chain (Bussgang decomposition, clipping
//!   model, shot noise, SNR, M-QAM BER).
//! * [`link`]: Monte Carlo BER, pilot equalizer, threshold extraction and the
//!   maximum-bit-rate sweep.
//! * [`scenario`], [`table`], [`commands`]: scenario files, result tables and
//!   the command implementations behind the CLI.

pub mod analysis;
pub mod commands;
pub mod error;
pub mod link;
pub mod ofdm;
pub mod quadrature;
pub mod scenario;
pub mod spad;
pub mod special;
pub mod table;

pub use error::{Error, Result};
