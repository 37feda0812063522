//! Gaussian expectations of the dead-time nonlinearity.
//!
//! The normalised transmit sample `x` is Gaussian with mean `rho` and standard
//! deviation `sigma_x`; negative values are clipped, so the photon count
//! argument is `N(x) = C_s x + C_n` for `x >= 0` and the dark-count floor
//! `C_n` for the clipped mass `Q(rho / sigma_x)`.

use crate::error::Result;
use crate::quadrature::{integrate, Tolerance};
use crate::special::{ln_phi, ln_q, phi, q};

use super::{PhotonAffineCoeffs, SignalStats};

/// `E[N z(N)]`, `E[N^2]`, `E[z^2]`, `E[z]`, `E[N]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectations {
    pub e_nz: f64,
    pub e_n2: f64,
    pub e_z2: f64,
    pub e_z: f64,
    pub e_n: f64,
}

/// Logs of the Gaussian tail moments `J_n(u) = int_u^inf (y - u)^n phi(y) dy`
/// for n = 0, 1, 2. In terms of `Q` and `phi`:
/// `J_0 = Q(u)`, `J_1 = phi(u) - u Q(u)`, `J_2 = (1 + u^2) Q(u) - u phi(u)`.
pub(crate) fn ln_tail_moments(u: f64) -> [f64; 3] {
    if u <= 5.0 {
        let qu = q(u);
        let pu = phi(u);
        [
            qu.ln(),
            (pu - u * qu).ln(),
            ((1.0 + u * u) * qu - u * pu).ln(),
        ]
    } else if u <= 30.0 {
        // Mills-ratio recurrence: I_0 = R, I_1 = 1 - u I_0, I_2 = I_0 - u I_1.
        let lp = ln_phi(u);
        let r = (ln_q(u) - lp).exp();
        let i1 = 1.0 - u * r;
        let i2 = r - u * i1;
        [ln_q(u), lp + i1.ln(), lp + i2.ln()]
    } else {
        // Asymptotic series of int_0^inf t^n exp(-u t - t^2/2) dt.
        let lp = ln_phi(u);
        let series = |n: i32| -> f64 {
            let inv = 1.0 / u;
            let mut term = (1..=n).map(f64::from).product::<f64>() * inv.powi(n + 1);
            let mut sum = term;
            for k in 0..40 {
                let m = f64::from(n + 2 * k);
                term *= -(m + 1.0) * (m + 2.0) / (2.0 * f64::from(k + 1)) * inv * inv;
                sum += term;
                if term.abs() < 1e-17 * sum.abs() {
                    break;
                }
            }
            sum
        };
        [
            lp + series(0).ln(),
            lp + series(1).ln(),
            lp + series(2).ln(),
        ]
    }
}

/// Unclipped part (`x >= 0`) of `E[N^2 exp(-k C_t N)]` and `E[N exp(-k C_t N)]`.
fn tilted_block(k: f64, stats: &SignalStats, c: &PhotonAffineCoeffs) -> (f64, f64) {
    let (rho, sx) = (stats.rho, stats.sigma_x);
    let a = k * c.c_t * c.c_s;
    // ln A_k = k^2 C_t^2 C_s^2 sigma^2 / 2 - k C_t C_s rho - k C_t C_n
    let ln_a = 0.5 * a * a * sx * sx - a * rho - k * c.c_t * c.c_n;
    // Tilted mean r = rho - k C_t C_s sigma^2; lower limit u = -r / sigma.
    let u = (a * sx * sx - rho) / sx;
    let [j0, j1, j2] = ln_tail_moments(u);
    let m0 = (ln_a + j0).exp();
    let m1 = (ln_a + j1).exp() * sx;
    let m2 = (ln_a + j2).exp() * sx * sx;
    (
        c.c_s * c.c_s * m2 + 2.0 * c.c_s * c.c_n * m1 + c.c_n * c.c_n * m0,
        c.c_s * m1 + c.c_n * m0,
    )
}

/// Closed-form expectations for `z(N) = N exp(-C_t N)`.
///
/// With `A_k = exp(k^2 C_t^2 C_s^2 s^2/2 - k C_t C_s rho - k C_t C_n)`,
/// `r_k = rho - k C_t C_s s^2` and `u_k = (k C_t C_s s^2 - rho)/s`
/// (`s = sigma_x`, `v = rho/s`):
///
/// ```text
/// E[Nz]  = A_1 {C_s^2[(r_1^2 + s^2) Q(u_1) + r_1 s phi(u_1)]
///              + 2 C_s C_n [r_1 Q(u_1) + s phi(u_1)] + C_n^2 Q(u_1)}
///          + C_n^2 exp(-C_t C_n) Q(v)
/// E[N^2] = C_s^2[(rho^2 + s^2) Q(-v) + rho s phi(v)]
///          + 2 C_s C_n [rho Q(-v) + s phi(v)] + C_n^2
/// E[z^2] = as E[Nz] with A_2, r_2, u_2 and exp(-2 C_t C_n)
/// E[z]   = A_1 {C_s [r_1 Q(u_1) + s phi(u_1)] + C_n Q(u_1)} + C_n exp(-C_t C_n) Q(v)
/// E[N]   = C_s [rho Q(-v) + s phi(v)] + C_n
/// ```
///
/// Products of `A_k` with `Q`/`phi` are formed in the log domain so they stay
/// finite deep into saturation.
pub fn bussgang_expectations_pq(stats: &SignalStats, c: &PhotonAffineCoeffs) -> Expectations {
    let atom = q(stats.rho / stats.sigma_x);
    let (b1_quad, b1_lin) = tilted_block(1.0, stats, c);
    let (b2_quad, _) = tilted_block(2.0, stats, c);
    let (u0_quad, u0_lin) = tilted_block(0.0, stats, c);
    let z_cn = c.c_n * (-c.c_t * c.c_n).exp();
    Expectations {
        e_nz: b1_quad + c.c_n * z_cn * atom,
        e_n2: u0_quad + c.c_n * c.c_n * atom,
        e_z2: b2_quad + z_cn * z_cn * atom,
        e_z: b1_lin + z_cn * atom,
        e_n: u0_lin + c.c_n * atom,
    }
}

/// Integral of `f(x) phi((x - rho)/sigma_x)/sigma_x` over `x >= 0`.
///
/// The range is split geometrically away from its lower end so that
/// integrands concentrated on the scale `1/(C_t C_s)` (deep saturation) are
/// resolved.
pub(crate) fn clipped_gaussian_integral<const K: usize, F>(
    stats: &SignalStats,
    c: &PhotonAffineCoeffs,
    f: F,
    tol: Tolerance,
) -> Result<[f64; K]>
where
    F: Fn(f64) -> [f64; K],
{
    let (rho, sx) = (stats.rho, stats.sigma_x);
    let lo = (rho - 40.0 * sx).max(0.0);
    let hi = (rho + 40.0 * sx).max(lo);
    let sat = c.c_t * c.c_s;
    let mut scale = if sat > 0.0 { sx.min(1.0 / sat) } else { sx } / 64.0;
    let mut total = [0.0; K];
    let mut a = lo;
    while a < hi {
        let b = (lo + scale).min(hi);
        let part = integrate(
            |x| {
                let w = phi((x - rho) / sx) / sx;
                let mut v = f(x);
                for e in v.iter_mut() {
                    *e *= w;
                }
                v
            },
            a,
            b,
            tol,
        )?;
        for k in 0..K {
            total[k] += part[k];
        }
        a = b;
        scale *= 2.0;
    }
    Ok(total)
}

/// Expectations for an arbitrary nonlinearity `z` by adaptive quadrature over
/// the clipped Gaussian, plus the clipped atom at `N = C_n`.
pub fn expectations_by_quadrature<Z>(
    stats: &SignalStats,
    c: &PhotonAffineCoeffs,
    z: Z,
    tol: Tolerance,
) -> Result<Expectations>
where
    Z: Fn(f64) -> f64,
{
    let [e_nz, e_n2, e_z2, e_z, e_n] = clipped_gaussian_integral(
        stats,
        c,
        |x| {
            let n = c.c_s * x + c.c_n;
            let zn = z(n);
            [n * zn, n * n, zn * zn, zn, n]
        },
        tol,
    )?;
    let atom = q(stats.rho / stats.sigma_x);
    let zc = z(c.c_n);
    Ok(Expectations {
        e_nz: e_nz + c.c_n * zc * atom,
        e_n2: e_n2 + c.c_n * c.c_n * atom,
        e_z2: e_z2 + zc * zc * atom,
        e_z: e_z + zc * atom,
        e_n: e_n + c.c_n * atom,
    })
}

/// Expectations for `z(N) = N / (1 + C_t N)` (relative tolerance 1e-8).
pub fn bussgang_expectations_aq(
    stats: &SignalStats,
    c: &PhotonAffineCoeffs,
) -> Result<Expectations> {
    let ct = c.c_t;
    expectations_by_quadrature(stats, c, |n| n / (1.0 + ct * n), Tolerance::relative(1e-8))
}

/// `E[f(N(x))]` for a scalar function, by the same quadrature.
pub(crate) fn expect_scalar<F>(
    stats: &SignalStats,
    c: &PhotonAffineCoeffs,
    f: F,
    rel: f64,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let [v] = clipped_gaussian_integral(
        stats,
        c,
        |x| [f(c.c_s * x + c.c_n)],
        Tolerance::relative(rel),
    )?;
    Ok(v + f(c.c_n) * q(stats.rho / stats.sigma_x))
}
