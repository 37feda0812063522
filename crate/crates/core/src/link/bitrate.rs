//! Maximum achievable bit rate.
//!
//! For each constellation the sweep looks for the shortest sample period
//! `T_s` at which some received power still reaches the target BER, and
//! reports `R / T_s`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::thresholds::golden_min;
use crate::analysis::{ber_mqam, dbm_to_watts, snr};
use crate::error::Result;
use crate::ofdm::{OfdmConfig, Scheme};
use crate::spad::{CountMode, DeadTimeKind, SpadArrayConfig};

const TS_MIN: f64 = 1e-13;
const TS_MAX: f64 = 1e-3;
const POWER_SCAN: (f64, f64, f64) = (-140.0, 40.0, 2.0);

/// Everything but the constellation order and the sample period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitRateFamily {
    pub scheme: Scheme,
    pub kind: DeadTimeKind,
    pub fft_size: usize,
    pub bias_db: f64,
    pub spad: SpadArrayConfig,
    pub count_mode: CountMode,
    pub target_ber: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BitRatePoint {
    pub scheme: Scheme,
    pub kind: DeadTimeKind,
    pub constellation: usize,
    pub spectral_efficiency: f64,
    /// `None` when the target is out of reach even at the longest period.
    pub symbol_period: Option<f64>,
    pub max_bit_rate: Option<f64>,
    /// Power minimising the BER at the limiting period.
    pub best_power_dbm: Option<f64>,
}

impl BitRateFamily {
    pub fn config(&self, constellation: usize, symbol_period: f64) -> Result<OfdmConfig> {
        OfdmConfig::new(
            self.scheme,
            constellation,
            self.fft_size,
            self.bias_db,
            symbol_period,
        )
    }

    /// Lowest BER over received power and the power achieving it.
    pub fn best_ber(&self, constellation: usize, symbol_period: f64) -> Result<(f64, f64)> {
        let cfg = self.config(constellation, symbol_period)?;
        let ber = |p: f64| -> Result<f64> {
            let s = snr(
                self.kind,
                self.count_mode,
                &cfg,
                &self.spad,
                dbm_to_watts(p),
            )?;
            Ok(ber_mqam(&s, constellation))
        };
        let (start, stop, step) = POWER_SCAN;
        let n = ((stop - start) / step).round() as usize;
        let mut best = (start, f64::INFINITY);
        for i in 0..=n {
            let p = start + i as f64 * step;
            let b = ber(p)?;
            if b < best.1 {
                best = (p, b);
            }
        }
        let (p, b) = golden_min(&ber, best.0 - step, best.0 + step)?;
        Ok(if b < best.1 { (p, b) } else { best })
    }

    fn feasible(&self, constellation: usize, symbol_period: f64) -> Result<Option<f64>> {
        let (p, b) = self.best_ber(constellation, symbol_period)?;
        Ok((b < self.target_ber).then_some(p))
    }

    /// Bisection on `log T_s` over `[1e-13, 1e-3]` s to 0.1%.
    pub fn max_bit_rate(&self, constellation: usize) -> Result<BitRatePoint> {
        let r = self.config(constellation, TS_MAX)?.spectral_efficiency();
        let mut point = BitRatePoint {
            scheme: self.scheme,
            kind: self.kind,
            constellation,
            spectral_efficiency: r,
            symbol_period: None,
            max_bit_rate: None,
            best_power_dbm: None,
        };
        let Some(mut best_p) = self.feasible(constellation, TS_MAX)? else {
            return Ok(point);
        };
        let (mut lo, mut hi) = (TS_MIN.ln(), TS_MAX.ln());
        if let Some(p) = self.feasible(constellation, TS_MIN)? {
            hi = lo;
            best_p = p;
        }
        while hi - lo > 1e-3 {
            let mid = 0.5 * (lo + hi);
            match self.feasible(constellation, mid.exp())? {
                Some(p) => {
                    hi = mid;
                    best_p = p;
                }
                None => lo = mid,
            }
        }
        let ts = hi.exp();
        point.symbol_period = Some(ts);
        point.max_bit_rate = Some(r / ts);
        point.best_power_dbm = Some(best_p);
        Ok(point)
    }
}

/// Sweep over constellation orders, in parallel.
pub fn max_bit_rate_sweep(
    family: &BitRateFamily,
    constellations: &[usize],
) -> Result<Vec<BitRatePoint>> {
    constellations
        .par_iter()
        .map(|&m| family.max_bit_rate(m))
        .collect()
}
