//! Event-level dead-time simulation of a single device.
//!
//! Both models start in their stationary state so that the mean count over a
//! window of length `T_s` equals `rate T_s exp(-rate tau)` (PQ) and
//! `rate T_s / (1 + rate tau)` (AQ) exactly:
//!
//! * PQ (paralyzable): arrivals are generated from `-tau` onward; an arrival
//!   inside the window registers iff the previous arrival is more than `tau`
//!   earlier. Every arrival restarts the blocking interval.
//! * AQ (non-paralyzable): with probability `g / (1 + g)` (`g = rate tau`) the
//!   device enters the window dead with a uniform residual dead time; each
//!   registration blocks the next `tau` seconds, arrivals in that interval are
//!   lost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use super::{CountDistribution, DeadTimeKind, PhotonFlux, SpadArrayConfig};
use crate::error::Result;

const CHUNK: usize = 1024;

/// Registered counts of one device over one window of length `symbol_period`.
pub fn dead_time_event_oracle<R: Rng + ?Sized>(
    rate: f64,
    kind: DeadTimeKind,
    dead_time: f64,
    symbol_period: f64,
    rng: &mut R,
) -> u64 {
    if !(rate > 0.0) {
        return 0;
    }
    let mean_gap = 1.0 / rate;
    let mut count = 0;
    match kind {
        DeadTimeKind::Pq => {
            let mut prev = f64::NEG_INFINITY;
            let mut t = -dead_time;
            loop {
                let e: f64 = Exp1.sample(rng);
                t += e * mean_gap;
                if t > symbol_period {
                    break;
                }
                if t >= 0.0 && t - prev > dead_time {
                    count += 1;
                }
                prev = t;
            }
        }
        DeadTimeKind::Aq => {
            let g = rate * dead_time;
            let u: f64 = rng.random();
            let mut ready = if u < g / (1.0 + g) {
                rng.random::<f64>() * dead_time
            } else {
                0.0
            };
            loop {
                let e: f64 = Exp1.sample(rng);
                let t = ready + e * mean_gap;
                if t > symbol_period {
                    break;
                }
                count += 1;
                ready = t + dead_time;
                if ready > symbol_period {
                    break;
                }
            }
        }
    }
    count
}

/// Empirical array count distribution from `n_samples` windows, each the
/// sum of independent per-device oracle runs. Chunks of windows use separate
/// streams of a ChaCha generator, so the result depends only on `seed`.
pub fn empirical_array_counts(
    flux: &PhotonFlux,
    kind: DeadTimeKind,
    cfg: &SpadArrayConfig,
    symbol_period: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CountDistribution> {
    let rate = flux.device_rate(symbol_period);
    let chunks = n_samples.div_ceil(CHUNK);
    let samples: Vec<u64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = (n_samples - c * CHUNK).min(CHUNK);
            (0..len)
                .map(|_| {
                    (0..flux.n_devices)
                        .map(|_| {
                            dead_time_event_oracle(
                                rate,
                                kind,
                                cfg.dead_time,
                                symbol_period,
                                &mut rng,
                            )
                        })
                        .sum::<u64>()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    CountDistribution::from_samples(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for kind in [DeadTimeKind::Pq, DeadTimeKind::Aq] {
            assert_eq!(dead_time_event_oracle(0.0, kind, 1e-8, 1e-6, &mut rng), 0);
        }
    }

    #[test]
    fn long_dead_time_allows_one_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            assert!(dead_time_event_oracle(1e9, DeadTimeKind::Aq, 2e-6, 1e-6, &mut rng) <= 1);
            assert!(dead_time_event_oracle(1e7, DeadTimeKind::Pq, 2e-6, 1e-6, &mut rng) <= 1);
        }
    }

    #[test]
    fn stationary_means() {
        let (tau, ts) = (13.5e-9, 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rate = 0.5 / tau;
        let n = 100_000;
        for (kind, expect) in [
            (DeadTimeKind::Pq, rate * ts * (-0.5f64).exp()),
            (DeadTimeKind::Aq, rate * ts / 1.5),
        ] {
            let mean = (0..n)
                .map(|_| dead_time_event_oracle(rate, kind, tau, ts, &mut rng))
                .sum::<u64>() as f64
                / n as f64;
            assert!(
                (mean / expect - 1.0).abs() < 0.01,
                "{kind}: {mean} vs {expect}"
            );
        }
    }
}
