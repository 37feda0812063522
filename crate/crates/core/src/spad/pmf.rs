//! Count distributions: exact single-device laws for both quenching types,
//! array laws by convolution, and sampling.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::dd::Dd;
use super::{DeadTimeKind, SpadArrayConfig};
use crate::error::{Error, Result};

/// Largest single-device support the exact formulas are evaluated on.
pub const MAX_DEVICE_SUPPORT: usize = 1024;
/// Largest stored array support.
pub const MAX_ARRAY_SUPPORT: usize = 1 << 22;

const NEGATIVE_CLAMP: f64 = 1e-12;
const ARRAY_TAIL: f64 = 1e-13;

/// Probability mass function over counts `offset..offset + pmf.len()`;
/// counts outside that window have zero (or truncated, < 1e-12) mass.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    offset: usize,
    pmf: Vec<f64>,
}

impl CountDistribution {
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        Self::with_offset(0, pmf)
    }

    /// Validates and clamps round-off negatives (above -1e-12) to zero.
    pub fn with_offset(offset: usize, mut pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidParameter {
                name: "pmf",
                reason: "empty probability vector".into(),
            });
        }
        for (i, p) in pmf.iter_mut().enumerate() {
            if !p.is_finite() || *p < -NEGATIVE_CLAMP {
                return Err(Error::NumericalInstability {
                    index: offset + i,
                    value: *p,
                });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::NumericalInstability {
                index: offset + pmf.len(),
                value: total,
            });
        }
        Ok(Self { offset, pmf })
    }

    pub fn point_mass(count: usize) -> Self {
        Self {
            offset: count,
            pmf: vec![1.0],
        }
    }

    /// Poisson law, truncated far in both tails.
    pub fn poisson(mean: f64) -> Self {
        if !(mean > 0.0) {
            return Self::point_mass(0);
        }
        let spread = 12.0 * mean.sqrt() + 40.0;
        let lo = (mean - spread).floor().max(0.0) as usize;
        let hi = (mean + spread).ceil() as usize;
        let ln_mean = mean.ln();
        let pmf = (lo..=hi)
            .map(|k| (k as f64 * ln_mean - mean - libm::lgamma(k as f64 + 1.0)).exp())
            .collect();
        Self { offset: lo, pmf }
    }

    /// Empirical distribution of a sample.
    pub fn from_samples(samples: &[u64]) -> Result<Self> {
        let (&lo, &hi) = match (samples.iter().min(), samples.iter().max()) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => {
                return Err(Error::InvalidParameter {
                    name: "samples",
                    reason: "no samples".into(),
                })
            }
        };
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        for &s in samples {
            counts[(s - lo) as usize] += 1;
        }
        let n = samples.len() as f64;
        Ok(Self {
            offset: lo as usize,
            pmf: counts.into_iter().map(|c| c as f64 / n).collect(),
        })
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Stored probabilities, starting at count `offset()`.
    pub fn probabilities(&self) -> &[f64] {
        &self.pmf
    }

    pub fn max_count(&self) -> usize {
        self.offset + self.pmf.len() - 1
    }

    pub fn prob(&self, count: usize) -> f64 {
        count
            .checked_sub(self.offset)
            .and_then(|i| self.pmf.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).sum::<f64>() / self.total_mass()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.iter()
            .map(|(k, p)| (k as f64 - m).powi(2) * p)
            .sum::<f64>()
            / self.total_mass()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pmf
            .iter()
            .enumerate()
            .map(move |(i, &p)| (i + self.offset, p))
    }

    /// Total-variation distance `0.5 sum |p - q|`.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = self.max_count().max(other.max_count());
        0.5 * (lo..=hi)
            .map(|k| (self.prob(k) - other.prob(k)).abs())
            .sum::<f64>()
    }

    /// Distribution of the sum of two independent counts.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.pmf.len() + other.pmf.len() - 1];
        for (i, &a) in self.pmf.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.pmf.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self {
            offset: self.offset + other.offset,
            pmf: out,
        }
    }

    /// Drops leading and trailing entries whose cumulative mass is below `tail`.
    fn trim(mut self, tail: f64) -> Self {
        let mut acc = 0.0;
        let mut start = 0;
        while start + 1 < self.pmf.len() && acc + self.pmf[start] < tail {
            acc += self.pmf[start];
            start += 1;
        }
        acc = 0.0;
        let mut end = self.pmf.len();
        while end > start + 1 && acc + self.pmf[end - 1] < tail {
            acc += self.pmf[end - 1];
            end -= 1;
        }
        self.pmf.truncate(end);
        self.pmf.drain(..start);
        self.offset += start;
        self
    }

    /// One draw by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match WeightedIndex::new(&self.pmf) {
            Ok(w) => (self.offset + w.sample(rng)) as u64,
            Err(_) => self.offset as u64,
        }
    }

    /// Sum of `n` independent draws, sampled as a multinomial allocation of
    /// the `n` draws over the support (sequential conditional binomials).
    pub fn sample_sum<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> u64 {
        let mut remaining = n;
        let mut mass = self.total_mass();
        let mut total = 0u64;
        for (k, &p) in self.pmf.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let last = k + 1 == self.pmf.len();
            let draws = if last || p >= mass {
                remaining
            } else if p <= 0.0 {
                0
            } else {
                Binomial::new(remaining, (p / mass).clamp(0.0, 1.0))
                    .map(|b| b.sample(rng))
                    .unwrap_or(0)
            };
            total += draws * (self.offset + k) as u64;
            remaining -= draws;
            mass -= p;
        }
        total
    }
}

/// Support bound `floor(T_s / (e tau))` associated with the paralyzable peak
/// count rate. The exact distribution below does not truncate there (its
/// mean at high flux exceeds this value); it is kept as a reference figure.
pub fn a_pq_max(dead_time: f64, symbol_period: f64) -> usize {
    (symbol_period / (std::f64::consts::E * dead_time)).floor() as usize
}

/// Largest count index of the non-paralyzable case split, `floor(T_s / tau)`.
pub fn a_aq_max(dead_time: f64, symbol_period: f64) -> usize {
    (symbol_period / dead_time).floor() as usize
}

/// Exact count distribution of one device in a window `T_s` for a Poisson
/// photon stream of `rate` counts per second.
///
/// PQ: `Pr(a) = sum_{j>=a} C(j, a) (-1)^(j-a) t_j` with
/// `t_j = [mu_m (T_s - (j-1) tau)]^j exp(-j mu_m tau) / j!` (zero once the
/// bracket is non-positive), evaluated in double-double arithmetic.
///
/// AQ: the three-case closed form on `0..=floor(T_s/tau) + 1` with
/// `lambda = 1/(1 + mu_m tau)`, `S_a = mu_m (T_s - a tau)` and `Pr(j, S)` the
/// Poisson mass (all mass at zero when `S <= 0`).
pub fn single_device_pmf(
    kind: DeadTimeKind,
    rate: f64,
    cfg: &SpadArrayConfig,
    symbol_period: f64,
) -> Result<CountDistribution> {
    cfg.require_dead_time_below(symbol_period)?;
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter {
            name: "rate",
            reason: format!("{rate} must be finite and >= 0"),
        });
    }
    if rate == 0.0 {
        return Ok(CountDistribution::point_mass(0));
    }
    let required = a_aq_max(cfg.dead_time, symbol_period) + 2;
    if required > MAX_DEVICE_SUPPORT {
        return Err(Error::SupportOverflow {
            required,
            limit: MAX_DEVICE_SUPPORT,
        });
    }
    match kind {
        DeadTimeKind::Pq => pq_pmf(rate, cfg.dead_time, symbol_period),
        DeadTimeKind::Aq => aq_pmf(rate, cfg.dead_time, symbol_period),
    }
}

fn pq_pmf(rate: f64, tau: f64, ts: f64) -> Result<CountDistribution> {
    let jmax = a_aq_max(tau, ts) + 1;
    let decay = (-Dd::prod(rate, tau)).exp();
    let mut t = Vec::with_capacity(jmax + 1);
    t.push(Dd::ONE);
    for j in 1..=jmax {
        let base = Dd::from_f64(ts) - Dd::prod((j - 1) as f64, tau);
        if base.hi <= 0.0 {
            break;
        }
        let y = base * rate * decay;
        let mut acc = Dd::ONE;
        for i in 1..=j {
            acc = (acc * y).div(Dd::from_f64(i as f64));
        }
        t.push(acc);
    }
    // Drop terms that cannot affect any probability at the 1e-20 level.
    let mut tail = 0.0;
    let mut last = t.len() - 1;
    while last > 0 && tail + t[last].hi * 2f64.powi(last as i32) < 1e-20 {
        tail += t[last].hi * 2f64.powi(last as i32);
        last -= 1;
    }
    t.truncate(last + 1);

    let n = t.len();
    let mut row = vec![Dd::ZERO; n];
    let mut acc = vec![Dd::ZERO; n];
    let mut largest = vec![0.0f64; n];
    for (j, &tj) in t.iter().enumerate() {
        row[j] = Dd::ONE;
        for a in (1..j).rev() {
            row[a] = row[a] + row[a - 1];
        }
        for a in 0..=j {
            let term = row[a] * tj;
            largest[a] = largest[a].max(term.hi.abs());
            acc[a] = if (j - a) % 2 == 0 {
                acc[a] + term
            } else {
                acc[a] - term
            };
        }
    }
    let unit_roundoff = 2f64.powi(-104);
    let mut pmf = Vec::with_capacity(n);
    for a in 0..n {
        let err = largest[a] * unit_roundoff * 4.0 * n as f64;
        if err > NEGATIVE_CLAMP {
            return Err(Error::NumericalInstability {
                index: a,
                value: largest[a],
            });
        }
        pmf.push(acc[a].to_f64());
    }
    CountDistribution::new(pmf)
}

fn aq_pmf(rate: f64, tau: f64, ts: f64) -> Result<CountDistribution> {
    let amax = a_aq_max(tau, ts);
    let g = rate * tau;
    let lam = 1.0 / (1.0 + g);
    let mu_t = rate * ts;
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=amax + 2).scan(0.0, |s, j| {
            *s += (j as f64).ln();
            Some(*s)
        }))
        .collect();
    let s_at = |a: isize| rate * (ts - a as f64 * tau);
    let poisson = |j: usize, s: f64| -> f64 {
        if s <= 0.0 {
            if j == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (j as f64 * s.ln() - s - ln_fact[j]).exp()
        }
    };
    // sum_{j=0}^{upper} (c0 - j) Pr(j, s)
    let partial = |upper: isize, c0: f64, s: f64| -> f64 {
        (0..=upper.max(-1))
            .map(|j| (c0 - j as f64) * poisson(j as usize, s))
            .sum()
    };
    let mut pmf = Vec::with_capacity(amax + 2);
    for a in 0..=amax + 1 {
        let ai = a as isize;
        let af = a as f64;
        let first = if a >= 2 {
            partial(ai - 2, af - 1.0, s_at(ai - 1))
        } else {
            0.0
        };
        let p = if a + 1 <= amax {
            lam * (first - 2.0 * partial(ai - 1, af, s_at(ai))
                + partial(ai, af + 1.0, s_at(ai + 1)))
        } else if a == amax {
            lam * (first - 2.0 * partial(ai - 1, af, s_at(ai)) - mu_t) + af + 1.0
        } else {
            lam * (first + mu_t) - af + 1.0
        };
        pmf.push(p);
    }
    CountDistribution::new(pmf)
}

/// Distribution of the sum of `n` i.i.d. device counts, by binary
/// exponentiation under convolution. Tails with cumulative mass below 1e-13
/// are trimmed after every convolution.
pub fn array_pmf(device: &CountDistribution, n: usize) -> Result<CountDistribution> {
    if n == 0 {
        return Ok(CountDistribution::point_mass(0));
    }
    let required = n.saturating_mul(device.max_count()).saturating_add(1);
    let mut result: Option<CountDistribution> = None;
    let mut power = device.clone().trim(ARRAY_TAIL);
    let mut k = n;
    loop {
        if k & 1 == 1 {
            result = Some(match result {
                None => power.clone(),
                Some(r) => {
                    check_len(r.pmf.len() + power.pmf.len() - 1, required)?;
                    r.convolve(&power).trim(ARRAY_TAIL)
                }
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        check_len(2 * power.pmf.len() - 1, required)?;
        power = power.convolve(&power).trim(ARRAY_TAIL);
    }
    Ok(result.expect("n >= 1"))
}

fn check_len(len: usize, required: usize) -> Result<()> {
    if len > MAX_ARRAY_SUPPORT {
        Err(Error::SupportOverflow {
            required,
            limit: MAX_ARRAY_SUPPORT,
        })
    } else {
        Ok(())
    }
}
