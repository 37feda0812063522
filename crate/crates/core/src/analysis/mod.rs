//! Closed-form BER analysis of SPAD-based optical OFDM.
//!
//! The received count for a normalised transmit sample `x` is modelled as
//! `z(N(x))` with `N(x) = C_s x + C_n` (`x >= 0`, otherwise `C_n`) and
//! `z` the dead-time transfer. The Bussgang decomposition
//! `z(N) = alpha N + Y` turns the nonlinearity into a gain and an
//! uncorrelated distortion term, from which the subcarrier SNR and the M-QAM
//! BER follow.

pub mod clipping;
pub mod expectations;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::link::{BerCurve, BerPoint, LinkScenario};
use crate::ofdm::{OfdmConfig, Scheme};
use crate::spad::{CountMode, DeadTimeKind, SpadArrayConfig};
use crate::special::{phi, q};

pub use clipping::{dco_clipping_model, ClippingModel};
pub use expectations::{
    bussgang_expectations_aq, bussgang_expectations_pq, expectations_by_quadrature, Expectations,
};

/// Clipped-Gaussian description of the normalised transmit samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalStats {
    /// Mean of the Gaussian before clipping, in unit-mean-normalised units.
    pub rho: f64,
    /// Standard deviation in normalised units.
    pub sigma_x: f64,
    /// `E[x_clipped]` before normalisation.
    pub mean_clipped: f64,
    /// Standard deviation of the bipolar frame.
    pub sigma_m: f64,
    /// DC bias `B_DC = beta sigma_m` (zero for ACO).
    pub bias: f64,
}

/// ACO: `sigma_m = sqrt((M-1)/3)`, `E[x_c] = sigma_m / sqrt(2 pi)`, `rho = 0`,
/// `sigma_x = sqrt(2 pi)`.
/// DCO: `sigma_m = sqrt(2(M-1)(N-2)/(3N))`, `B = beta sigma_m`,
/// `E[x_c] = B Q(-B/sigma_m) + sigma_m phi(B/sigma_m)`, `rho = B/E[x_c]`,
/// `sigma_x = sigma_m/E[x_c]`.
pub fn clipped_signal_stats(cfg: &OfdmConfig) -> SignalStats {
    let m = cfg.constellation as f64;
    match cfg.scheme {
        Scheme::Aco => {
            let sigma_m = ((m - 1.0) / 3.0).sqrt();
            let root = (2.0 * std::f64::consts::PI).sqrt();
            SignalStats {
                rho: 0.0,
                sigma_x: root,
                mean_clipped: sigma_m / root,
                sigma_m,
                bias: 0.0,
            }
        }
        Scheme::Dco => {
            let n = cfg.fft_size as f64;
            let sigma_m = (2.0 * (m - 1.0) * (n - 2.0) / (3.0 * n)).sqrt();
            let b = cfg.beta() * sigma_m;
            let mean = b * q(-b / sigma_m) + sigma_m * phi(b / sigma_m);
            SignalStats {
                rho: b / mean,
                sigma_x: sigma_m / mean,
                mean_clipped: mean,
                sigma_m,
                bias: b,
            }
        }
    }
}

/// Affine photon mapping `N(x) = C_s x + C_n` and dead-time constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhotonAffineCoeffs {
    pub c_s: f64,
    pub c_n: f64,
    pub c_t: f64,
}

/// `C_s = C_FF C_PDP P T_s (1 + P_AP) / E_P`, `C_n = N_DCR N_SPAD T_s (1 + P_AP)`,
/// `C_t = tau / (T_s N_SPAD)`.
pub fn photon_affine_coeffs(
    power_w: f64,
    cfg: &SpadArrayConfig,
    symbol_period: f64,
) -> Result<PhotonAffineCoeffs> {
    if !(power_w >= 0.0) {
        return Err(Error::NegativePower(power_w));
    }
    Ok(PhotonAffineCoeffs {
        c_s: cfg.fill_factor * cfg.pdp * power_w * symbol_period * (1.0 + cfg.afterpulse_prob)
            / cfg.photon_energy(),
        c_n: cfg.dark_counts(symbol_period),
        c_t: cfg.c_t(symbol_period),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BussgangDecomposition {
    pub alpha: f64,
    pub sigma_y_sq: f64,
    #[serde(skip)]
    pub expectations: Expectations,
}

/// `alpha = E[Nz]/E[N^2]`, `sigma_Y^2 = E[Y^2] - E[Y]^2` with
/// `E[Y^2] = E[z^2] - alpha^2 E[N^2]` and `E[Y] = E[z] - alpha E[N]`.
/// Negative round-off down to `-1e-6 E[z^2]` is clamped to zero.
pub fn bussgang_decompose(e: &Expectations) -> Result<BussgangDecomposition> {
    if !(e.e_n2 > 0.0) {
        return Err(Error::ZeroInputPower);
    }
    let alpha = e.e_nz / e.e_n2;
    let ey2 = e.e_z2 - alpha * alpha * e.e_n2;
    let ey = e.e_z - alpha * e.e_n;
    let mut var = ey2 - ey * ey;
    if var < 0.0 {
        if var < -1e-6 * e.e_z2 {
            return Err(Error::InconsistentDistortion {
                value: var,
                scale: e.e_z2,
            });
        }
        var = 0.0;
    }
    Ok(BussgangDecomposition {
        alpha,
        sigma_y_sq: var,
        expectations: *e,
    })
}

pub fn expectations(
    kind: DeadTimeKind,
    stats: &SignalStats,
    c: &PhotonAffineCoeffs,
) -> Result<Expectations> {
    match kind {
        DeadTimeKind::Pq => Ok(bussgang_expectations_pq(stats, c)),
        DeadTimeKind::Aq => bussgang_expectations_aq(stats, c),
    }
}

/// Shot-noise variance averaged over the signal distribution.
///
/// Poisson: `E[z]`. Exact PQ: `E[(3 tau - 2 T_s)/T_s C_t z^2 + z]`.
/// Exact AQ: `E{N_SPAD lambda^3 [N/N_SPAD + g^2 lambda (1 + 2g/3 + g^2/6)]}`
/// with `g = C_t N` and `lambda = 1/(1 + g)`.
pub fn shot_noise_variance(
    kind: DeadTimeKind,
    mode: CountMode,
    stats: &SignalStats,
    c: &PhotonAffineCoeffs,
    spad: &SpadArrayConfig,
    symbol_period: f64,
) -> Result<f64> {
    let e = expectations(kind, stats, c)?;
    shot_noise_from(kind, mode, &e, stats, c, spad, symbol_period)
}

fn shot_noise_from(
    kind: DeadTimeKind,
    mode: CountMode,
    e: &Expectations,
    stats: &SignalStats,
    c: &PhotonAffineCoeffs,
    spad: &SpadArrayConfig,
    symbol_period: f64,
) -> Result<f64> {
    match (mode, kind) {
        (CountMode::Poisson, _) => Ok(e.e_z),
        (CountMode::Exact, DeadTimeKind::Pq) => {
            let tau = spad.dead_time;
            Ok((3.0 * tau - 2.0 * symbol_period) / symbol_period * c.c_t * e.e_z2 + e.e_z)
        }
        (CountMode::Exact, DeadTimeKind::Aq) => {
            let n_spad = spad.n_devices as f64;
            let ct = c.c_t;
            expectations::expect_scalar(
                stats,
                c,
                |n| {
                    let g = ct * n;
                    let lam = 1.0 / (1.0 + g);
                    n_spad
                        * lam.powi(3)
                        * (n / n_spad + g * g * lam * (1.0 + 2.0 * g / 3.0 + g * g / 6.0))
                },
                1e-8,
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrResult {
    pub snr: f64,
    pub spectral_efficiency: f64,
    /// Numerator of the SNR expression.
    pub signal_power: f64,
    pub distortion_var: f64,
    pub shot_var: f64,
    /// `alpha_c^2 sigma_cp^2` (zero for ACO).
    pub clip_var: f64,
}

/// Subcarrier SNR.
///
/// ACO: `alpha^2 C_s^2 sigma_x^2 / (2 R (sigma_Y^2 + sigma_N^2))`.
/// DCO: `alpha_c^2 alpha^2 C_s^2 sigma_x^2 / (R (alpha_c^2 sigma_cp^2 + sigma_Y^2 + sigma_N^2))`.
///
/// The dead time is not required to be shorter than `T_s` here; the
/// expressions stay defined and the bit-rate sweep relies on that.
pub fn snr(
    kind: DeadTimeKind,
    mode: CountMode,
    cfg: &OfdmConfig,
    spad: &SpadArrayConfig,
    power_w: f64,
) -> Result<SnrResult> {
    let ts = cfg.symbol_period;
    let stats = clipped_signal_stats(cfg);
    let c = photon_affine_coeffs(power_w, spad, ts)?;
    let e = expectations(kind, &stats, &c)?;
    let bg = bussgang_decompose(&e)?;
    let shot = shot_noise_from(kind, mode, &e, &stats, &c, spad, ts)?;
    let r = cfg.spectral_efficiency();
    let gain = bg.alpha * bg.alpha * c.c_s * c.c_s * stats.sigma_x * stats.sigma_x;
    let (signal_power, clip_var, denom) = match cfg.scheme {
        Scheme::Aco => (gain, 0.0, 2.0 * r * (bg.sigma_y_sq + shot)),
        Scheme::Dco => {
            let clip = dco_clipping_model(cfg, &c)?;
            let ac2 = clip.alpha_c * clip.alpha_c;
            let cv = ac2 * clip.sigma_cp_sq;
            (ac2 * gain, cv, r * (cv + bg.sigma_y_sq + shot))
        }
    };
    let snr = if denom > 0.0 {
        signal_power / denom
    } else {
        0.0
    };
    Ok(SnrResult {
        snr,
        spectral_efficiency: r,
        signal_power,
        distortion_var: bg.sigma_y_sq,
        shot_var: shot,
        clip_var,
    })
}

/// Gray M-QAM bit error rate:
/// `4(sqrt M - 1)/(sqrt M log2 M) Q(sqrt(3R/(M-1) SNR))
///  + 4(sqrt M - 2)/(sqrt M log2 M) Q(3 sqrt(3R/(M-1) SNR))`.
pub fn ber_mqam(snr: &SnrResult, m: usize) -> f64 {
    ber_from_snr(snr.snr, snr.spectral_efficiency, m)
}

pub fn ber_from_snr(snr: f64, spectral_efficiency: f64, m: usize) -> f64 {
    let mf = m as f64;
    let root = mf.sqrt();
    let bits = mf.log2();
    let arg = (3.0 * spectral_efficiency / (mf - 1.0) * snr.max(0.0)).sqrt();
    let ber = 4.0 * (root - 1.0) / (root * bits) * q(arg)
        + 4.0 * (root - 2.0) / (root * bits) * q(3.0 * arg);
    ber.clamp(0.0, 1.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

/// Analytic BER at one received power, for the scenario's count mode.
pub fn analytic_ber(scenario: &LinkScenario, power_dbm: f64) -> Result<f64> {
    let s = snr(
        scenario.kind,
        scenario.count_mode,
        &scenario.ofdm,
        &scenario.spad,
        dbm_to_watts(power_dbm),
    )?;
    Ok(ber_mqam(&s, scenario.ofdm.constellation))
}

/// Analytic BER at each power (`n_bits` and `n_errors` are zero).
pub fn analytic_ber_curve(scenario: &LinkScenario, powers_dbm: &[f64]) -> Result<BerCurve> {
    let points = powers_dbm
        .iter()
        .map(|&p| {
            Ok(BerPoint {
                power_dbm: p,
                ber: analytic_ber(scenario, p)?,
                n_bits: 0,
                n_errors: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BerCurve::new(points)
}
