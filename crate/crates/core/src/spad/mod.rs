//! SPAD array receiver: photon flux, dead-time transfer, exact count
//! distributions and moments, count sampling, and an event-level oracle.
//!
//! Units: `mu` is the expected number of *potential* counts of the whole array
//! in one sample period (dimensionless). Per-device rates passed to the
//! distribution functions are in counts per second.

mod dd;
pub mod oracle;
pub mod pmf;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use oracle::{dead_time_event_oracle, empirical_array_counts};
pub use pmf::{array_pmf, single_device_pmf, CountDistribution};

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum (m/s).
pub const LIGHT_SPEED: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpadArrayConfig {
    pub fill_factor: f64,
    pub pdp: f64,
    /// Dark count rate per device (Hz).
    pub dcr_hz: f64,
    pub afterpulse_prob: f64,
    /// Dead time per device (s).
    pub dead_time: f64,
    pub n_devices: usize,
    /// Wavelength (m).
    pub wavelength: f64,
}

impl Default for SpadArrayConfig {
    fn default() -> Self {
        Self {
            fill_factor: 0.322,
            pdp: 0.2,
            dcr_hz: 7270.0,
            afterpulse_prob: 0.01,
            dead_time: 13.5e-9,
            n_devices: 1024,
            wavelength: 450e-9,
        }
    }
}

fn check(ok: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: reason(),
        })
    }
}

impl SpadArrayConfig {
    pub fn validate(&self) -> Result<()> {
        check(
            (0.0..=1.0).contains(&self.fill_factor),
            "fill_factor",
            || format!("{} is outside [0, 1]", self.fill_factor),
        )?;
        check((0.0..=1.0).contains(&self.pdp), "pdp", || {
            format!("{} is outside [0, 1]", self.pdp)
        })?;
        check(
            self.dcr_hz >= 0.0 && self.dcr_hz.is_finite(),
            "dcr_hz",
            || format!("{} must be finite and >= 0", self.dcr_hz),
        )?;
        check(
            self.afterpulse_prob >= 0.0 && self.afterpulse_prob.is_finite(),
            "afterpulse_prob",
            || format!("{} must be finite and >= 0", self.afterpulse_prob),
        )?;
        check(
            self.dead_time > 0.0 && self.dead_time.is_finite(),
            "dead_time",
            || format!("{} must be positive", self.dead_time),
        )?;
        check(self.n_devices >= 1, "n_devices", || {
            "must be at least 1".into()
        })?;
        check(
            self.wavelength > 0.0 && self.wavelength.is_finite(),
            "wavelength",
            || format!("{} must be positive", self.wavelength),
        )
    }

    /// Photon energy `h c / lambda` (J).
    pub fn photon_energy(&self) -> f64 {
        PLANCK * LIGHT_SPEED / self.wavelength
    }

    /// Dead-time constant `tau / (T_s N_SPAD)`.
    pub fn c_t(&self, symbol_period: f64) -> f64 {
        self.dead_time / (symbol_period * self.n_devices as f64)
    }

    /// Expected dark counts of the array per sample, after-pulsing included.
    pub fn dark_counts(&self, symbol_period: f64) -> f64 {
        self.dcr_hz * self.n_devices as f64 * symbol_period * (1.0 + self.afterpulse_prob)
    }

    pub fn require_dead_time_below(&self, symbol_period: f64) -> Result<()> {
        if self.dead_time < symbol_period {
            Ok(())
        } else {
            Err(Error::DeadTimeExceedsSymbol {
                dead_time: self.dead_time,
                symbol_period,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DeadTimeKind {
    /// Passive quenching (paralyzable).
    Pq,
    /// Active quenching (non-paralyzable).
    Aq,
}

impl std::fmt::Display for DeadTimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DeadTimeKind::Pq => "PQ",
            DeadTimeKind::Aq => "AQ",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    /// Poisson counts with the dead-time transfer mean.
    Poisson,
    /// Exact dead-time count distribution.
    Exact,
}

impl std::fmt::Display for CountMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CountMode::Poisson => "poisson",
            CountMode::Exact => "exact",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonFlux {
    pub mu: f64,
    pub n_devices: usize,
}

impl PhotonFlux {
    /// Expected potential counts per device per sample.
    pub fn per_device(&self) -> f64 {
        self.mu / self.n_devices as f64
    }

    /// Per-device potential count rate (counts/s).
    pub fn device_rate(&self, symbol_period: f64) -> f64 {
        self.per_device() / symbol_period
    }

    /// Flux for a given number of photons incident on the array per sample.
    pub fn from_incident_photons(
        photons: f64,
        cfg: &SpadArrayConfig,
        symbol_period: f64,
    ) -> Result<Self> {
        if !(photons >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "incident_photons",
                reason: format!("{photons} must be >= 0"),
            });
        }
        let detected = photons * cfg.fill_factor * cfg.pdp * (1.0 + cfg.afterpulse_prob);
        Ok(Self {
            mu: detected + cfg.dark_counts(symbol_period),
            n_devices: cfg.n_devices,
        })
    }
}

/// `mu = [C_FF C_PDP P T_s / E_P + N_DCR N_SPAD T_s] (1 + P_AP)`.
pub fn mean_potential_counts(
    power_w: f64,
    cfg: &SpadArrayConfig,
    symbol_period: f64,
) -> Result<PhotonFlux> {
    if !(power_w >= 0.0) {
        return Err(Error::NegativePower(power_w));
    }
    if !(symbol_period > 0.0) {
        return Err(Error::InvalidParameter {
            name: "symbol_period",
            reason: format!("{symbol_period} must be positive"),
        });
    }
    let signal = cfg.fill_factor * cfg.pdp * power_w * symbol_period / cfg.photon_energy();
    Ok(PhotonFlux {
        mu: signal * (1.0 + cfg.afterpulse_prob) + cfg.dark_counts(symbol_period),
        n_devices: cfg.n_devices,
    })
}

/// Mean registered counts of the array: `mu exp(-mu C_t)` (PQ) or
/// `mu / (1 + mu C_t)` (AQ).
pub fn dead_time_mean_transfer(
    flux: &PhotonFlux,
    kind: DeadTimeKind,
    cfg: &SpadArrayConfig,
    symbol_period: f64,
) -> f64 {
    transfer(flux.mu, kind, cfg.c_t(symbol_period))
}

/// Transfer function on raw potential counts.
pub fn transfer(mu: f64, kind: DeadTimeKind, c_t: f64) -> f64 {
    match kind {
        DeadTimeKind::Pq => mu * (-mu * c_t).exp(),
        DeadTimeKind::Aq => mu / (1.0 + mu * c_t),
    }
}

/// Peak (PQ) or asymptotic (AQ) registered counts per sample.
pub fn max_count_rate(kind: DeadTimeKind, cfg: &SpadArrayConfig, symbol_period: f64) -> f64 {
    let full = symbol_period * cfg.n_devices as f64 / cfg.dead_time;
    match kind {
        DeadTimeKind::Pq => full / std::f64::consts::E,
        DeadTimeKind::Aq => full,
    }
}

/// Mean and variance of the array count.
///
/// PQ: mean `mu exp(-mu C_t)`; variance
/// `N [m^2 (3 tau^2 - 2 T_s tau) + m T_s]` with `m = mu_m exp(-mu_m tau)` and
/// `mu_m` the per-device rate in counts/s.
/// AQ: mean `N lambda mu_m T_s`; variance
/// `N lambda^3 [mu_m T_s + g^2 lambda (1 + 2g/3 + g^2/6)]` with
/// `g = mu_m tau` and `lambda = 1 / (1 + g)`.
pub fn exact_moments(
    kind: DeadTimeKind,
    flux: &PhotonFlux,
    cfg: &SpadArrayConfig,
    symbol_period: f64,
) -> Result<(f64, f64)> {
    cfg.require_dead_time_below(symbol_period)?;
    let n = cfg.n_devices as f64;
    let tau = cfg.dead_time;
    let ts = symbol_period;
    let rate = flux.mu / (n * ts);
    let g = rate * tau;
    Ok(match kind {
        DeadTimeKind::Pq => {
            let m = rate * (-g).exp();
            let var = n * (m * m * (3.0 * tau * tau - 2.0 * ts * tau) + m * ts);
            (flux.mu * (-g).exp(), var)
        }
        DeadTimeKind::Aq => {
            let lam = 1.0 / (1.0 + g);
            let var =
                n * lam.powi(3) * (rate * ts + g * g * lam * (1.0 + 2.0 * g / 3.0 + g * g / 6.0));
            (n * lam * rate * ts, var)
        }
    })
}

/// Samples one array count.
///
/// Poisson mode draws from a Poisson law with the transfer mean. Exact mode
/// draws every device from the single-device distribution (as a multinomial
/// over the device support) and sums; when that distribution cannot be
/// formed, each device is simulated with the event oracle instead.
pub fn sample_counts<R: Rng + ?Sized>(
    flux: &PhotonFlux,
    kind: DeadTimeKind,
    mode: CountMode,
    cfg: &SpadArrayConfig,
    symbol_period: f64,
    rng: &mut R,
) -> Result<u64> {
    match mode {
        CountMode::Poisson => Ok(sample_poisson(
            dead_time_mean_transfer(flux, kind, cfg, symbol_period),
            rng,
        )),
        CountMode::Exact => {
            cfg.require_dead_time_below(symbol_period)?;
            let rate = flux.device_rate(symbol_period);
            match single_device_pmf(kind, rate, cfg, symbol_period) {
                Ok(device) => Ok(device.sample_sum(cfg.n_devices as u64, rng)),
                Err(e) if e.is_numerical() => Ok((0..cfg.n_devices)
                    .map(|_| dead_time_event_oracle(rate, kind, cfg.dead_time, symbol_period, rng))
                    .sum()),
                Err(e) => Err(e),
            }
        }
    }
}

pub(crate) fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(0)
}
