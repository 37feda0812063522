//! End-to-end link evaluation: Monte Carlo BER, pilot equalisation, BER
//! threshold extraction (MPR, MOI, LEA) and the maximum-bit-rate sweep.

pub mod bitrate;
pub mod monte_carlo;
pub mod thresholds;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::{OfdmConfig, Scheme};
use crate::spad::{CountMode, DeadTimeKind, SpadArrayConfig};

pub use bitrate::{max_bit_rate_sweep, BitRateFamily, BitRatePoint};
pub use monte_carlo::{
    equalizer_from_pilot, pilot_equalizer_coefficient, run_monte_carlo, run_until, wilson_interval,
    McOptions, McResult,
};
pub use thresholds::{analytic_thresholds, find_thresholds, LinkMetrics, PowerGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkScenario {
    pub ofdm: OfdmConfig,
    pub spad: SpadArrayConfig,
    pub kind: DeadTimeKind,
    pub count_mode: CountMode,
    pub target_ber: f64,
}

impl LinkScenario {
    pub fn new(
        ofdm: OfdmConfig,
        spad: SpadArrayConfig,
        kind: DeadTimeKind,
        count_mode: CountMode,
        target_ber: f64,
    ) -> Result<Self> {
        let s = Self {
            ofdm,
            spad,
            kind,
            count_mode,
            target_ber,
        };
        s.validate()?;
        Ok(s)
    }

    /// Default receiver, N = 2048, target BER 1e-3, Poisson counts.
    pub fn reference(
        scheme: Scheme,
        constellation: usize,
        bias_db: f64,
        symbol_period: f64,
        kind: DeadTimeKind,
    ) -> Result<Self> {
        Self::new(
            OfdmConfig::new(scheme, constellation, 2048, bias_db, symbol_period)?,
            SpadArrayConfig::default(),
            kind,
            CountMode::Poisson,
            1e-3,
        )
    }

    /// The dead time must be shorter than `T_s` whenever exact count
    /// statistics are used; the Poisson model only needs the mean transfer.
    pub fn validate(&self) -> Result<()> {
        self.ofdm.validate()?;
        self.spad.validate()?;
        if !(self.target_ber > 0.0 && self.target_ber < 0.5) {
            return Err(Error::InvalidParameter {
                name: "target_ber",
                reason: format!("{} is outside (0, 0.5)", self.target_ber),
            });
        }
        if self.count_mode == CountMode::Exact {
            self.spad.require_dead_time_below(self.ofdm.symbol_period)?;
        }
        Ok(())
    }

    pub fn with_count_mode(mut self, mode: CountMode) -> Self {
        self.count_mode = mode;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub power_dbm: f64,
    pub ber: f64,
    pub n_bits: u64,
    pub n_errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    pub fn new(points: Vec<BerPoint>) -> Result<Self> {
        if points
            .windows(2)
            .any(|w| !(w[1].power_dbm > w[0].power_dbm))
        {
            return Err(Error::InvalidParameter {
                name: "powers",
                reason: "powers must be strictly increasing".into(),
            });
        }
        Ok(Self { points })
    }
}
