//! Clipping distortion of biased DCO-OFDM.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ofdm::{OfdmConfig, Scheme};
use crate::special::{phi, q};

use super::{clipped_signal_stats, PhotonAffineCoeffs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClippingModel {
    /// Clipping gain `alpha_c`.
    pub alpha_c: f64,
    /// Clipping noise variance (pre-normalisation units).
    pub sigma_c_sq: f64,
    /// Signal power attenuation `sigma_m^2 / (sigma_m^2 + B_DC^2)`.
    pub g_dc: f64,
    /// Clipping noise referred to the photon count domain.
    pub sigma_cp_sq: f64,
    pub b_dc: f64,
}

/// ```text
/// alpha_c  = Q(-B/s) + beta G_DC phi(B/s)
/// G_DC     = s^2 / (s^2 + B^2)
/// sigma_c^2 = alpha_c (1 - alpha_c)(s^2 + B^2) - [B Q(-B/s) + s phi(B/s) - alpha_c B]^2
/// sigma_cp^2 = (1 - G_DC / R_DCO) C_s^2 sigma_c^2 / E[x_clipped]^2
/// ```
/// with `s = sigma_m`, `B = beta s`. A negative `1 - G_DC/R_DCO` (only
/// possible for 4-QAM at a bias below about 0.005 dB) is taken as zero.
pub fn dco_clipping_model(cfg: &OfdmConfig, coeffs: &PhotonAffineCoeffs) -> Result<ClippingModel> {
    if cfg.scheme != Scheme::Dco {
        return Err(Error::NotDco);
    }
    let stats = clipped_signal_stats(cfg);
    let s = stats.sigma_m;
    let beta = cfg.beta();
    let b = stats.bias;
    let g_dc = s * s / (s * s + b * b);
    let alpha_c = q(-b / s) + beta * g_dc * phi(b / s);
    let mean_term = b * q(-b / s) + s * phi(b / s) - alpha_c * b;
    let sigma_c_sq = (alpha_c * (1.0 - alpha_c) * (s * s + b * b) - mean_term * mean_term).max(0.0);
    let r = cfg.spectral_efficiency();
    let factor = (1.0 - g_dc / r).max(0.0);
    let sigma_cp_sq =
        factor * coeffs.c_s * coeffs.c_s * sigma_c_sq / (stats.mean_clipped * stats.mean_clipped);
    Ok(ClippingModel {
        alpha_c,
        sigma_c_sq,
        g_dc,
        sigma_cp_sq,
        b_dc: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn coeffs() -> PhotonAffineCoeffs {
        PhotonAffineCoeffs {
            c_s: 100.0,
            c_n: 7.5,
            c_t: 1e-5,
        }
    }

    fn dco(m: usize, bias_db: f64) -> OfdmConfig {
        OfdmConfig::new(Scheme::Dco, m, 2048, bias_db, 1e-6).unwrap()
    }

    #[test]
    fn aco_is_rejected() {
        let aco = OfdmConfig::new(Scheme::Aco, 4, 2048, 0.0, 1e-6).unwrap();
        assert_eq!(
            dco_clipping_model(&aco, &coeffs()).unwrap_err(),
            Error::NotDco
        );
    }

    #[test]
    fn limits() {
        let big = dco_clipping_model(&dco(16, 60.0), &coeffs()).unwrap();
        assert!((big.alpha_c - 1.0).abs() < 1e-9);
        assert!(big.sigma_c_sq < 1e-9);
        let zero = dco_clipping_model(&dco(16, 0.0), &coeffs()).unwrap();
        assert!((zero.alpha_c - 0.5).abs() < 1e-15);
        assert!(zero.g_dc > 0.0 && zero.g_dc <= 1.0);
    }

    #[test]
    fn matches_sampled_clipping() {
        let cfg = dco(64, 7.0);
        let model = dco_clipping_model(&cfg, &coeffs()).unwrap();
        let stats = clipped_signal_stats(&cfg);
        let normal = Normal::new(stats.bias, stats.sigma_m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 10_000_000;
        let (mut sxc, mut sxx) = (0.0, 0.0);
        let xs: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        for &x in &xs {
            sxc += x * x.max(0.0);
            sxx += x * x;
        }
        let alpha = sxc / sxx;
        let (mut s1, mut s2) = (0.0, 0.0);
        for &x in &xs {
            let y = x.max(0.0) - alpha * x;
            s1 += y;
            s2 += y * y;
        }
        let var = s2 / n as f64 - (s1 / n as f64).powi(2);
        assert!(
            (alpha / model.alpha_c - 1.0).abs() < 5e-3,
            "{alpha} {}",
            model.alpha_c
        );
        assert!(
            (var / model.sigma_c_sq - 1.0).abs() < 2.5e-2,
            "{var} {}",
            model.sigma_c_sq
        );
    }
}
