//! Monte Carlo BER of the full chain: random bits, OFDM transmitter, photon
//! counting SPAD array, single-tap equaliser, OFDM receiver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{BerPoint, LinkScenario};
use crate::analysis::{dbm_to_watts, photon_affine_coeffs, PhotonAffineCoeffs};
use crate::error::{Error, Result};
use crate::ofdm::Modem;
use crate::spad::{sample_counts, PhotonFlux};

const WILSON_Z: f64 = 1.959_963_984_540_054;
const PILOT_STREAM: u64 = 0;
const BATCHES_PER_ROUND: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McResult {
    pub power_dbm: f64,
    pub ber: f64,
    pub n_bits: u64,
    pub n_errors: u64,
    /// Wilson 95% interval for the BER.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Equaliser coefficient (amplitude per count) estimated from the pilot.
    pub equalizer: f64,
}

impl McResult {
    fn new(power_dbm: f64, n_bits: u64, n_errors: u64, equalizer: f64) -> Self {
        let ber = if n_bits == 0 {
            0.0
        } else {
            n_errors as f64 / n_bits as f64
        };
        let (ci_low, ci_high) = wilson_interval(n_errors, n_bits);
        Self {
            power_dbm,
            ber,
            n_bits,
            n_errors,
            ci_low,
            ci_high,
            equalizer,
        }
    }

    pub fn point(&self) -> BerPoint {
        BerPoint {
            power_dbm: self.power_dbm,
            ber: self.ber,
            n_bits: self.n_bits,
            n_errors: self.n_errors,
        }
    }
}

/// Adaptive stopping: run until `min_errors` errors or `max_bits` bits,
/// whichever comes first, in batches of `batch_frames` frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub min_errors: u64,
    pub max_bits: u64,
    pub batch_frames: usize,
    pub pilot_frames: usize,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            min_errors: 100,
            max_bits: 10_000_000,
            batch_frames: 16,
            pilot_frames: 10,
        }
    }
}

pub fn wilson_interval(errors: u64, bits: u64) -> (f64, f64) {
    if bits == 0 {
        return (0.0, 1.0);
    }
    let n = bits as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

struct Chain<'a> {
    scenario: &'a LinkScenario,
    modem: Modem,
    coeffs: PhotonAffineCoeffs,
}

impl<'a> Chain<'a> {
    fn new(scenario: &'a LinkScenario, power_dbm: f64) -> Result<Self> {
        scenario.validate()?;
        Ok(Self {
            scenario,
            modem: Modem::new(scenario.ofdm)?,
            coeffs: photon_affine_coeffs(
                dbm_to_watts(power_dbm),
                &scenario.spad,
                scenario.ofdm.symbol_period,
            )?,
        })
    }

    /// Transmits one random frame; returns bits, the unit-mean intensity,
    /// the transmit scale and the registered counts.
    fn frame<R: Rng>(&self, rng: &mut R) -> Result<(Vec<bool>, Vec<f64>, f64, Vec<f64>)> {
        let bits: Vec<bool> = (0..self.scenario.ofdm.bits_per_frame())
            .map(|_| rng.random())
            .collect();
        let (frame, scale) = self.modem.transmit(&bits)?;
        let s = self.scenario;
        let counts = frame
            .samples
            .iter()
            .map(|&x| {
                let flux = PhotonFlux {
                    mu: self.coeffs.c_s * x + self.coeffs.c_n,
                    n_devices: s.spad.n_devices,
                };
                sample_counts(
                    &flux,
                    s.kind,
                    s.count_mode,
                    &s.spad,
                    s.ofdm.symbol_period,
                    rng,
                )
                .map(|c| c as f64)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((bits, frame.samples, scale, counts))
    }

    fn pilot(&self, frames: usize, seed: u64) -> Result<f64> {
        let mut rng = stream_rng(seed, PILOT_STREAM);
        let (mut xs, mut zs) = (Vec::new(), Vec::new());
        for _ in 0..frames.max(1) {
            let (_, x, _, z) = self.frame(&mut rng)?;
            xs.extend(x);
            zs.extend(z);
        }
        equalizer_from_pilot(&xs, &zs)
    }

    fn batch(&self, frames: usize, equalizer: f64, rng: &mut ChaCha8Rng) -> Result<(u64, u64)> {
        let (mut bits_total, mut errors) = (0u64, 0u64);
        for _ in 0..frames {
            let (bits, _, scale, counts) = self.frame(rng)?;
            let amplitudes: Vec<f64> = counts.iter().map(|c| c * equalizer).collect();
            let decided = self.modem.receive(&amplitudes, scale)?;
            errors += bits.iter().zip(&decided).filter(|(a, b)| a != b).count() as u64;
            bits_total += bits.len() as u64;
        }
        Ok((bits_total, errors))
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Equaliser coefficient for a scenario and power, from `n_pilot_frames`
/// known frames.
pub fn pilot_equalizer_coefficient(
    scenario: &LinkScenario,
    power_dbm: f64,
    n_pilot_frames: usize,
    seed: u64,
) -> Result<f64> {
    if n_pilot_frames == 0 {
        return Err(Error::InvalidParameter {
            name: "pilot_frames",
            reason: "at least one pilot frame is required".into(),
        });
    }
    Chain::new(scenario, power_dbm)?.pilot(n_pilot_frames, seed)
}

/// Single-tap equaliser from a known pilot: the inverse of the least-squares
/// slope of received counts on transmitted intensity.
pub fn equalizer_from_pilot(pilot: &[f64], counts: &[f64]) -> Result<f64> {
    if pilot.len() != counts.len() || pilot.is_empty() {
        return Err(Error::FrameLength {
            expected: pilot.len(),
            got: counts.len(),
        });
    }
    let n = pilot.len() as f64;
    let mx = pilot.iter().sum::<f64>() / n;
    let mz = counts.iter().sum::<f64>() / n;
    let (mut sxz, mut sxx) = (0.0, 0.0);
    for (&x, &z) in pilot.iter().zip(counts) {
        sxz += (x - mx) * (z - mz);
        sxx += (x - mx) * (x - mx);
    }
    if !(sxx > 0.0) || !(sxz > 0.0) {
        return Err(Error::NoSignal);
    }
    Ok(sxx / sxz)
}

/// Fixed-length run of `n_frames` frames.
pub fn run_monte_carlo(
    scenario: &LinkScenario,
    power_dbm: f64,
    n_frames: usize,
    seed: u64,
) -> Result<McResult> {
    if n_frames == 0 {
        return Err(Error::InvalidParameter {
            name: "n_frames",
            reason: "at least one frame is required".into(),
        });
    }
    let opts = McOptions::default();
    let chain = Chain::new(scenario, power_dbm)?;
    let eq = chain.pilot(opts.pilot_frames, seed)?;
    let batches = n_frames.div_ceil(opts.batch_frames) as u64;
    let (bits, errors) = (0..batches)
        .into_par_iter()
        .map(|b| {
            let frames = (n_frames - b as usize * opts.batch_frames).min(opts.batch_frames);
            chain.batch(frames, eq, &mut stream_rng(seed, b + 1))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(McResult::new(power_dbm, bits, errors, eq))
}

/// Adaptive run. Batches execute in parallel in rounds of fixed size, so
/// the result depends only on the seed.
pub fn run_until(
    scenario: &LinkScenario,
    power_dbm: f64,
    opts: &McOptions,
    seed: u64,
) -> Result<McResult> {
    if opts.pilot_frames == 0 {
        return Err(Error::InvalidParameter {
            name: "pilot_frames",
            reason: "at least one pilot frame is required".into(),
        });
    }
    let chain = Chain::new(scenario, power_dbm)?;
    let eq = chain.pilot(opts.pilot_frames, seed)?;
    let (mut bits, mut errors, mut next) = (0u64, 0u64, 1u64);
    while errors < opts.min_errors && bits < opts.max_bits {
        let (b, e) = (next..next + BATCHES_PER_ROUND)
            .into_par_iter()
            .map(|s| chain.batch(opts.batch_frames.max(1), eq, &mut stream_rng(seed, s)))
            .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
        bits += b;
        errors += e;
        next += BATCHES_PER_ROUND;
    }
    Ok(McResult::new(power_dbm, bits, errors, eq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analytic_ber;
    use crate::ofdm::{OfdmConfig, Scheme};
    use crate::spad::{CountMode, DeadTimeKind, SpadArrayConfig};

    fn scenario(scheme: Scheme, m: usize, ts: f64) -> LinkScenario {
        LinkScenario::new(
            OfdmConfig::new(scheme, m, 256, 7.0, ts).unwrap(),
            SpadArrayConfig::default(),
            DeadTimeKind::Pq,
            CountMode::Poisson,
            1e-3,
        )
        .unwrap()
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 1000);
        assert!(lo.abs() < 1e-15);
        assert!((hi - 0.00383).abs() < 1e-5);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
    }

    #[test]
    fn equalizer_is_inverse_gain_in_linear_regime() {
        let s = scenario(Scheme::Aco, 4, 1e-3);
        let chain = Chain::new(&s, -80.0).unwrap();
        let eq = chain.pilot(8, 3).unwrap();
        assert!(
            (eq * chain.coeffs.c_s - 1.0).abs() < 0.01,
            "{}",
            eq * chain.coeffs.c_s
        );
    }

    #[test]
    fn equalizer_rejects_flat_input() {
        assert_eq!(
            equalizer_from_pilot(&[1.0, 1.0], &[3.0, 4.0]).unwrap_err(),
            Error::NoSignal
        );
        assert_eq!(
            equalizer_from_pilot(&[0.0, 2.0], &[3.0, 3.0]).unwrap_err(),
            Error::NoSignal
        );
        assert!((equalizer_from_pilot(&[0.0, 2.0], &[1.0, 5.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn equalizer_scales_inversely_with_power() {
        let s = scenario(Scheme::Dco, 16, 1e-3);
        let a = pilot_equalizer_coefficient(&s, -80.0, 4, 1).unwrap();
        let b = pilot_equalizer_coefficient(&s, -80.0 + 10.0 * 2f64.log10(), 4, 1).unwrap();
        assert!(a > 0.0 && b > 0.0);
        assert!((a / b - 2.0).abs() < 0.04, "{}", a / b);
        assert!(pilot_equalizer_coefficient(&s, -80.0, 0, 1).is_err());
    }

    #[test]
    fn zero_frames_rejected() {
        let s = scenario(Scheme::Aco, 4, 1e-6);
        assert!(matches!(
            run_monte_carlo(&s, -70.0, 0, 1),
            Err(Error::InvalidParameter {
                name: "n_frames",
                ..
            })
        ));
    }

    #[test]
    fn no_light_and_no_dark_counts_is_no_signal() {
        let mut s = scenario(Scheme::Aco, 4, 1e-6);
        s.spad.dcr_hz = 0.0;
        assert_eq!(
            run_monte_carlo(&s, f64::NEG_INFINITY, 1, 1).unwrap_err(),
            Error::NoSignal
        );
    }

    #[test]
    fn deterministic_for_a_seed() {
        let s = scenario(Scheme::Dco, 16, 1e-6);
        let a = run_monte_carlo(&s, -70.0, 20, 9).unwrap();
        let b = run_monte_carlo(&s, -70.0, 20, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_bits, 20 * s.ofdm.bits_per_frame() as u64);
    }

    #[test]
    fn high_snr_is_error_free() {
        let s = scenario(Scheme::Aco, 4, 1e-3);
        let r = run_monte_carlo(&s, -70.0, 8, 1).unwrap();
        assert_eq!(r.n_errors, 0);
    }

    #[test]
    fn tracks_the_analytic_curve() {
        let s = scenario(Scheme::Aco, 16, 1e-6);
        for p in [-76.0, -72.0] {
            let a = analytic_ber(&s, p).unwrap();
            let r = run_until(
                &s,
                p,
                &McOptions {
                    min_errors: 200,
                    ..McOptions::default()
                },
                5,
            )
            .unwrap();
            assert!(
                r.ber / a > 0.5 && r.ber / a < 2.0,
                "{p}: mc {} analytic {a}",
                r.ber
            );
        }
    }

    #[test]
    fn adaptive_run_stops_on_errors() {
        let s = scenario(Scheme::Dco, 64, 1e-6);
        let opts = McOptions {
            min_errors: 100,
            max_bits: u64::MAX,
            batch_frames: 2,
            pilot_frames: 2,
        };
        let r = run_until(&s, -75.0, &opts, 2).unwrap();
        assert!(r.n_errors >= 100);
        assert!(r.ci_low <= r.ber && r.ber <= r.ci_high);
    }
}
