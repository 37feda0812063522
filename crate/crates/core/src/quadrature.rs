//! Adaptive Gauss-Kronrod (7/15) quadrature for vector-valued integrands.
//!
//! Several expectations over the same signal density are needed at once, so
//! the integrand returns `[f64; K]` and all components share the nodes. The
//! interval with the worst error (relative to its component tolerance) is
//! bisected until every component meets `max(abs_tol, rel_tol * |I_k|)`.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-300,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self {
            rel,
            ..Self::default()
        }
    }
}

struct Segment<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: [f64; K],
}

fn gk15<const K: usize, F>(f: &F, a: f64, b: f64) -> Segment<K>
where
    F: Fn(f64) -> [f64; K],
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let centre = f(c);
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    for k in 0..K {
        kron[k] = WGK[7] * centre[k];
        gauss[k] = WG[3] * centre[k];
    }
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let lo = f(c - h * x);
        let hi = f(c + h * x);
        for k in 0..K {
            let s = lo[k] + hi[k];
            kron[k] += w * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for k in 0..K {
        value[k] = kron[k] * h;
        error[k] = ((kron[k] - gauss[k]) * h).abs();
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]` to the requested tolerance.
pub fn integrate<const K: usize, F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<[f64; K]>
where
    F: Fn(f64) -> [f64; K],
{
    if a == b {
        return Ok([0.0; K]);
    }
    let mut segments = vec![gk15(&f, a, b)];
    loop {
        let mut total = [0.0; K];
        let mut err = [0.0; K];
        for s in &segments {
            for k in 0..K {
                total[k] += s.value[k];
                err[k] += s.error[k];
            }
        }
        let limits: [f64; K] = std::array::from_fn(|k| tol.abs.max(tol.rel * total[k].abs()));
        if (0..K).all(|k| err[k] <= limits[k]) {
            return Ok(total);
        }
        if segments.len() >= tol.max_intervals {
            let achieved = (0..K)
                .map(|k| err[k] / total[k].abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            return Err(Error::QuadratureNonConvergence {
                achieved,
                requested: tol.rel,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let score = (0..K).map(|k| s.error[k] / limits[k]).fold(0.0, f64::max);
                (i, score)
            })
            .fold(
                (0, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            )
            .0;
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Interval cannot be split further in floating point.
            let achieved = (0..K)
                .map(|k| err[k] / total[k].abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            return Err(Error::QuadratureNonConvergence {
                achieved,
                requested: tol.rel,
            });
        }
        segments.push(gk15(&f, s.a, mid));
        segments.push(gk15(&f, mid, s.b));
    }
}
