//! Gaussian tail and density helpers.
//!
//! `q` is evaluated through the complementary error function (`libm::erfc`,
//! accurate to a few ulp over the whole range). `ln_q` switches to the Laplace
//! continued fraction for the Mills ratio above `x = 5`, which keeps the
//! logarithm finite and accurate long after `q` itself underflows.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn ln_phi(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Natural log of `Q(x)`, finite for all finite `x`.
pub fn ln_q(x: f64) -> f64 {
    if x < 5.0 {
        q(x).ln()
    } else {
        ln_phi(x) + mills_ratio(x).ln()
    }
}

/// Mills ratio `Q(x) / phi(x)` for `x > 0`, by the Laplace continued fraction
/// evaluated with the modified Lentz method.
fn mills_ratio(x: f64) -> f64 {
    // R(x) = 1 / (x + 1/(x + 2/(x + 3/(x + ...))))
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Inverse of `Q` on (0, 1), by bracketed Newton iteration.
pub fn q_inv(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "q_inv domain is (0, 1)");
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    let mut x = 0.0;
    for _ in 0..200 {
        let fx = q(x) - p;
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = fx / phi(x);
        let mut next = x + step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() < 1e-15 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}
