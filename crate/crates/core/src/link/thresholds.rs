//! BER threshold extraction.
//!
//! MPR (minimum power requirement) is the power at which the BER first falls
//! below the target; MOI (maximum optical irradiance) is where it rises back
//! above it; LEA (low error area) is `MOI - MPR` in dB.

use serde::{Deserialize, Serialize};

use super::{BerCurve, LinkScenario};
use crate::analysis::analytic_ber;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    /// `None` when infeasible or when the curve starts below the target.
    pub mpr_dbm: Option<f64>,
    /// `None` when infeasible or when the BER never rises back in range.
    pub moi_dbm: Option<f64>,
    /// `moi - mpr` when both are known.
    pub lea_db: Option<f64>,
    pub feasible: bool,
}

impl LinkMetrics {
    fn infeasible() -> Self {
        Self {
            mpr_dbm: None,
            moi_dbm: None,
            lea_db: None,
            feasible: false,
        }
    }

    fn from(mpr: Option<f64>, moi: Option<f64>) -> Self {
        Self {
            mpr_dbm: mpr,
            moi_dbm: moi,
            lea_db: mpr.zip(moi).map(|(a, b)| b - a),
            feasible: true,
        }
    }
}

/// Largest number of points a [`PowerGrid`] may hold.
pub const MAX_POINTS: u64 = 1_000_000;

/// Power grid `start:stop:step` in dBm (inclusive of `stop` within 1e-9).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl PowerGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter {
                name: "power",
                reason: format!("invalid range {start}:{stop}:{step}"),
            });
        }
        let grid = Self { start, stop, step };
        let span = grid.span();
        if !span.is_finite()
            || span.floor() > MAX_POINTS as f64
            || (span >= 0.0 && start + step == start)
        {
            return Err(Error::InvalidParameter {
                name: "power",
                reason: format!(
                    "range {start}:{stop}:{step} exceeds {MAX_POINTS} points or cannot be stepped"
                ),
            });
        }
        Ok(grid)
    }

    /// Empty when `stop < start`.
    pub fn points(&self) -> Vec<f64> {
        let Some(n) = self.count() else {
            return Vec::new();
        };
        (0..n)
            .map(|i| {
                let p = self.start + i as f64 * self.step;
                // Avoid accumulating representation error in printed values.
                let r = (p * 1e9).round() / 1e9;
                if r.is_finite() {
                    r
                } else {
                    p
                }
            })
            .collect()
    }

    /// Steps from `start` to `stop`, with `stop` included within 1e-9.
    fn span(&self) -> f64 {
        (self.stop - self.start + 1e-9) / self.step
    }

    fn count(&self) -> Option<u64> {
        let span = self.span();
        (span >= 0.0).then(|| span.floor() as u64 + 1)
    }
}

impl std::fmt::Display for PowerGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

impl std::str::FromStr for PowerGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config {
            key: "power".into(),
            message: format!("expected start:stop:step in dBm, got `{s}`"),
        };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        PowerGrid::new(v[0], v[1], v[2]).map_err(|_| bad())
    }
}

fn log_cross(p0: f64, b0: f64, p1: f64, b1: f64, target: f64) -> f64 {
    let l = |b: f64| b.max(1e-300).log10();
    let (l0, l1, lt) = (l(b0), l(b1), l(target));
    if (l1 - l0).abs() < 1e-300 {
        return 0.5 * (p0 + p1);
    }
    p0 + (lt - l0) / (l1 - l0) * (p1 - p0)
}

/// Thresholds from a sampled curve, interpolating `log10(BER)` linearly
/// between the bracketing points.
pub fn find_thresholds(curve: &BerCurve, target: f64) -> LinkMetrics {
    let pts = &curve.points;
    let Some(first_below) = pts.iter().position(|p| p.ber < target) else {
        return LinkMetrics::infeasible();
    };
    let mpr = (first_below > 0).then(|| {
        let (a, b) = (&pts[first_below - 1], &pts[first_below]);
        log_cross(a.power_dbm, a.ber, b.power_dbm, b.ber, target)
    });
    let moi = pts[first_below..]
        .iter()
        .position(|p| p.ber >= target)
        .map(|k| {
            let j = first_below + k;
            let (a, b) = (&pts[j - 1], &pts[j]);
            log_cross(a.power_dbm, a.ber, b.power_dbm, b.ber, target)
        });
    LinkMetrics::from(mpr, moi)
}

/// Thresholds of the analytic curve: grid scan, then bisection of each
/// crossing to 0.001 dB. If no grid point is below target, the deepest point
/// is refined by golden-section search before declaring infeasibility.
pub fn analytic_thresholds(scenario: &LinkScenario, grid: &PowerGrid) -> Result<LinkMetrics> {
    let target = scenario.target_ber;
    let f = |p: f64| analytic_ber(scenario, p);
    let powers = grid.points();
    if powers.is_empty() {
        return Ok(LinkMetrics::infeasible());
    }
    let bers: Vec<f64> = powers.iter().map(|&p| f(p)).collect::<Result<_>>()?;
    let mut below = bers.iter().position(|&b| b < target);
    let mut anchor = None;
    if below.is_none() {
        let i = bers
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (i, &b)| if b < best.1 { (i, b) } else { best },
            )
            .0;
        let lo = powers[i.saturating_sub(1)];
        let hi = powers[(i + 1).min(powers.len() - 1)];
        let (p, b) = golden_min(&f, lo, hi)?;
        if b >= target {
            return Ok(LinkMetrics::infeasible());
        }
        anchor = Some(p);
        below = Some(i);
    }
    let i = below.expect("set above");
    let inside = anchor.unwrap_or(powers[i]);
    let mpr = if anchor.is_none() && i == 0 {
        None
    } else {
        let left = if anchor.is_some() {
            powers[i.saturating_sub(1)].min(inside)
        } else {
            powers[i - 1]
        };
        Some(bisect(&f, left, inside, target)?)
    };
    let next_above = bers
        .iter()
        .enumerate()
        .skip(i + 1)
        .find(|(k, &b)| b >= target && powers[*k] > inside);
    let moi = match next_above {
        Some((k, _)) => {
            let left = if anchor.is_some() {
                inside
            } else {
                powers[k - 1]
            };
            Some(bisect(&f, left.max(inside), powers[k], target)?)
        }
        None => None,
    };
    Ok(LinkMetrics::from(mpr, moi))
}

/// Crossing of `target` between `a` and `b` (opposite sides), in dB.
fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, target: f64) -> Result<f64> {
    let fa_below = f(a)? < target;
    while (b - a).abs() > 1e-3 {
        let m = 0.5 * (a + b);
        if (f(m)? < target) == fa_below {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

pub(crate) fn golden_min<F: Fn(f64) -> Result<f64>>(
    f: &F,
    mut a: f64,
    mut b: f64,
) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > 1e-3 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}
