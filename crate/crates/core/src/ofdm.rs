//! DCO- and ACO-OFDM baseband: Gray-mapped square QAM, Hermitian subcarrier
//! assembly, real inverse DFT, bias and zero clipping, unit-mean scaling, and
//! the matching receiver chain.
//!
//! DFT convention: the forward transform is unscaled,
//! `X[k] = sum_n x[n] exp(-2 pi i k n / N)`, and the inverse carries the `1/N`,
//! so `sum |X[k]|^2 = N * sum x[n]^2`. No cyclic prefix is inserted; the
//! channel is flat.
//!
//! The transmitter scales the *post-clip* frame to unit mean (bias energy
//! included). The scale is returned so the receiver can undo it.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    Aco,
    Dco,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Aco => "ACO",
            Scheme::Dco => "DCO",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub scheme: Scheme,
    /// Constellation size M (a power of four).
    pub constellation: usize,
    /// DFT length N (a power of two, at least 8).
    pub fft_size: usize,
    /// DC bias level `10 log10(beta^2 + 1)` in dB; ignored for ACO.
    pub bias_db: f64,
    /// Sample (photon counting) period T_s in seconds.
    pub symbol_period: f64,
}

impl OfdmConfig {
    pub fn new(
        scheme: Scheme,
        constellation: usize,
        fft_size: usize,
        bias_db: f64,
        symbol_period: f64,
    ) -> Result<Self> {
        let cfg = Self {
            scheme,
            constellation,
            fft_size,
            bias_db,
            symbol_period,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.constellation;
        if m < 4 || !m.is_power_of_two() || m.trailing_zeros() % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "constellation",
                reason: format!("{m} is not a power of four >= 4"),
            });
        }
        let n = self.fft_size;
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter {
                name: "fft_size",
                reason: format!("{n} is not a power of two >= 8"),
            });
        }
        if !(self.bias_db >= 0.0) || !self.bias_db.is_finite() {
            return Err(Error::InvalidParameter {
                name: "bias_db",
                reason: format!("{} must be finite and >= 0", self.bias_db),
            });
        }
        if !(self.symbol_period > 0.0) || !self.symbol_period.is_finite() {
            return Err(Error::InvalidParameter {
                name: "symbol_period",
                reason: format!("{} must be positive", self.symbol_period),
            });
        }
        Ok(())
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.constellation.trailing_zeros() as usize
    }

    /// Number of QAM symbols carried by one OFDM frame.
    pub fn data_subcarriers(&self) -> usize {
        match self.scheme {
            Scheme::Dco => self.fft_size / 2 - 1,
            Scheme::Aco => self.fft_size / 4,
        }
    }

    pub fn bits_per_frame(&self) -> usize {
        self.data_subcarriers() * self.bits_per_symbol()
    }

    /// Bias coefficient beta; zero for ACO.
    pub fn beta(&self) -> f64 {
        match self.scheme {
            Scheme::Aco => 0.0,
            Scheme::Dco => bias_beta(self.bias_db),
        }
    }

    /// Spectral efficiency in bit/s/Hz: `log2(M)/4` for ACO and
    /// `(N-2)/(2N) log2(M)` for DCO.
    pub fn spectral_efficiency(&self) -> f64 {
        let bits = self.bits_per_symbol() as f64;
        match self.scheme {
            Scheme::Aco => 0.25 * bits,
            Scheme::Dco => (self.fft_size as f64 - 2.0) / (2.0 * self.fft_size as f64) * bits,
        }
    }
}

/// `beta = sqrt(10^(bias_db/10) - 1)`.
pub fn bias_beta(bias_db: f64) -> f64 {
    (10f64.powf(bias_db / 10.0) - 1.0).max(0.0).sqrt()
}

/// Square M-QAM with per-axis Gray labels, scaled to unit average energy.
///
/// A symbol's bits are split in half: the first half labels the in-phase
/// level and the second half the quadrature level. On each axis the Gray
/// label `g` selects level `(L - 1) - 2 * gray_decode(g)` (L = sqrt(M)), so the
/// all-zero label is the top-right point. For M = 4, bits `00` map to
/// `(1 + j)/sqrt(2)`, `01` to `(1 - j)/sqrt(2)`, `10` to `(-1 + j)/sqrt(2)` and
/// `11` to `(-1 - j)/sqrt(2)`.
#[derive(Debug, Clone)]
pub struct Qam {
    order: usize,
    half_bits: usize,
    levels: usize,
    scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QamSymbolFrame {
    pub symbols: Vec<Complex64>,
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

fn gray_encode(b: usize) -> usize {
    b ^ (b >> 1)
}

impl Qam {
    pub fn new(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() || order.trailing_zeros() % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "constellation",
                reason: format!("{order} is not a power of four >= 4"),
            });
        }
        let half_bits = order.trailing_zeros() as usize / 2;
        let levels = 1 << half_bits;
        Ok(Self {
            order,
            half_bits,
            levels,
            scale: (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.half_bits
    }

    fn level_of_label(&self, label: usize) -> f64 {
        (self.levels as f64 - 1.0) - 2.0 * gray_decode(label) as f64
    }

    /// Maps a full symbol label (in-phase bits high) to its constellation point.
    pub fn point(&self, label: usize) -> Complex64 {
        let i_label = label >> self.half_bits;
        let q_label = label & (self.levels - 1);
        Complex64::new(self.level_of_label(i_label), self.level_of_label(q_label)) * self.scale
    }

    /// Nearest level on one axis, returned as its Gray label. Ties go to the
    /// smaller label.
    fn slice_axis(&self, v: f64) -> usize {
        let l = self.levels as f64;
        let u = ((l - 1.0) - v / self.scale) / 2.0;
        let lo = u.floor().clamp(0.0, l - 1.0) as usize;
        let hi = (lo + 1).min(self.levels - 1);
        let d_lo = (u - lo as f64).abs();
        let d_hi = (u - hi as f64).abs();
        let (g_lo, g_hi) = (gray_encode(lo), gray_encode(hi));
        if d_lo < d_hi || (d_lo == d_hi && g_lo <= g_hi) {
            g_lo
        } else {
            g_hi
        }
    }

    pub fn modulate(&self, bits: &[bool]) -> Result<QamSymbolFrame> {
        let k = self.bits_per_symbol();
        if bits.len() % k != 0 {
            return Err(Error::BitLength {
                len: bits.len(),
                bits_per_symbol: k,
            });
        }
        let symbols = bits
            .chunks_exact(k)
            .map(|chunk| {
                let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
                self.point(label)
            })
            .collect();
        Ok(QamSymbolFrame { symbols })
    }

    /// Maximum-likelihood (minimum Euclidean distance) detection. For a square
    /// grid this separates into independent per-axis slicing; with the
    /// in-phase label in the high bits, per-axis tie breaking toward the
    /// smaller label yields the smallest full label among tied points.
    pub fn detect(&self, frame: &QamSymbolFrame) -> Vec<bool> {
        let k = self.bits_per_symbol();
        let mut bits = Vec::with_capacity(frame.symbols.len() * k);
        for s in &frame.symbols {
            let label = (self.slice_axis(s.re) << self.half_bits) | self.slice_axis(s.im);
            for b in (0..k).rev() {
                bits.push((label >> b) & 1 == 1);
            }
        }
        bits
    }
}

/// Gray-labelled unit-energy M-QAM modulation.
pub fn qam_modulate(bits: &[bool], order: usize) -> Result<QamSymbolFrame> {
    Qam::new(order)?.modulate(bits)
}

/// Minimum-distance M-QAM detection.
pub fn qam_detect(frame: &QamSymbolFrame, order: usize) -> Result<Vec<bool>> {
    Ok(Qam::new(order)?.detect(frame))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Bipolar,
    Biased,
    Clipped,
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomainFrame {
    pub samples: Vec<f64>,
    pub stage: Stage,
}

impl TimeDomainFrame {
    pub fn new(samples: Vec<f64>, stage: Stage) -> Self {
        Self { samples, stage }
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn mean_square(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyFrame {
    pub bins: Vec<Complex64>,
}

impl FrequencyFrame {
    /// Largest Hermitian-symmetry violation and where it occurs.
    pub fn hermitian_mismatch(&self) -> (usize, f64) {
        let n = self.bins.len();
        let mut worst = (0, self.bins[0].im.abs());
        if n % 2 == 0 && self.bins[n / 2].im.abs() > worst.1 {
            worst = (n / 2, self.bins[n / 2].im.abs());
        }
        for k in 1..n {
            let d = (self.bins[k] - self.bins[n - k].conj()).norm();
            if d > worst.1 {
                worst = (k, d);
            }
        }
        worst
    }
}

/// Transform engine for one DFT size. Plans are built once and shared.
#[derive(Clone)]
pub struct Modem {
    cfg: OfdmConfig,
    qam: Qam,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Modem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Modem").field("cfg", &self.cfg).finish()
    }
}

impl Modem {
    pub fn new(cfg: OfdmConfig) -> Result<Self> {
        cfg.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            cfg,
            qam: Qam::new(cfg.constellation)?,
            forward: planner.plan_fft_forward(cfg.fft_size),
            inverse: planner.plan_fft_inverse(cfg.fft_size),
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    pub fn qam(&self) -> &Qam {
        &self.qam
    }

    /// Places data symbols on their subcarriers and fills the upper half with
    /// complex conjugates. DCO uses bins `1..N/2`, ACO the odd bins below N/2.
    pub fn assemble_subcarriers(&self, syms: &QamSymbolFrame) -> Result<FrequencyFrame> {
        let n = self.cfg.fft_size;
        let expected = self.cfg.data_subcarriers();
        if syms.symbols.len() != expected {
            return Err(Error::SymbolCount {
                expected,
                got: syms.symbols.len(),
            });
        }
        let mut bins = vec![Complex64::new(0.0, 0.0); n];
        for (i, &s) in syms.symbols.iter().enumerate() {
            let k = match self.cfg.scheme {
                Scheme::Dco => i + 1,
                Scheme::Aco => 2 * i + 1,
            };
            bins[k] = s;
            bins[n - k] = s.conj();
        }
        Ok(FrequencyFrame { bins })
    }

    /// Inverse DFT of a Hermitian frame (with the `1/N` factor).
    pub fn to_time_domain(&self, freq: &FrequencyFrame) -> Result<TimeDomainFrame> {
        let n = self.cfg.fft_size;
        if freq.bins.len() != n {
            return Err(Error::FrameLength {
                expected: n,
                got: freq.bins.len(),
            });
        }
        let scale = freq.bins.iter().map(|b| b.norm()).fold(1.0, f64::max);
        let (bin, mismatch) = freq.hermitian_mismatch();
        if mismatch > 1e-9 * scale {
            return Err(Error::NotHermitian { bin, mismatch });
        }
        let mut buf = freq.bins.clone();
        self.inverse.process(&mut buf);
        let inv_n = 1.0 / n as f64;
        Ok(TimeDomainFrame::new(
            buf.iter().map(|c| c.re * inv_n).collect(),
            Stage::Bipolar,
        ))
    }

    /// Unscaled forward DFT of a real frame.
    pub fn forward_dft(&self, samples: &[f64]) -> Result<FrequencyFrame> {
        let n = self.cfg.fft_size;
        if samples.len() != n {
            return Err(Error::FrameLength {
                expected: n,
                got: samples.len(),
            });
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        Ok(FrequencyFrame { bins: buf })
    }

    /// DCO: add `B_DC = beta * sqrt(E[x^2])` (frame mean square) and clip at
    /// zero. ACO: clip at zero.
    pub fn apply_bias_and_clip(&self, frame: &TimeDomainFrame) -> Result<TimeDomainFrame> {
        apply_bias_and_clip(frame, &self.cfg)
    }

    /// Receiver: forward DFT and extraction of the data subcarriers. ACO data
    /// bins carry half the bipolar amplitude after clipping, so they are
    /// scaled by 2.
    pub fn demodulate(&self, samples: &[f64]) -> Result<QamSymbolFrame> {
        let freq = self.forward_dft(samples)?;
        let symbols = match self.cfg.scheme {
            Scheme::Dco => freq.bins[1..self.cfg.fft_size / 2].to_vec(),
            Scheme::Aco => (0..self.cfg.data_subcarriers())
                .map(|i| freq.bins[2 * i + 1] * 2.0)
                .collect(),
        };
        Ok(QamSymbolFrame { symbols })
    }

    /// Full transmitter: bits to a unit-mean, non-negative intensity frame.
    /// Returns the frame and the normalisation scale that was applied.
    pub fn transmit(&self, bits: &[bool]) -> Result<(TimeDomainFrame, f64)> {
        let syms = self.qam.modulate(bits)?;
        let freq = self.assemble_subcarriers(&syms)?;
        let bipolar = self.to_time_domain(&freq)?;
        let clipped = self.apply_bias_and_clip(&bipolar)?;
        normalize_unit_mean(&clipped)
    }

    /// Full receiver: equalised amplitudes (in the unit-mean domain) back to
    /// bits, undoing the transmitter's normalisation scale.
    pub fn receive(&self, amplitudes: &[f64], tx_scale: f64) -> Result<Vec<bool>> {
        let restored: Vec<f64> = amplitudes.iter().map(|a| a / tx_scale).collect();
        let syms = self.demodulate(&restored)?;
        Ok(self.qam.detect(&syms))
    }
}

/// Bias (DCO) and zero clipping; the input must be bipolar.
pub fn apply_bias_and_clip(frame: &TimeDomainFrame, cfg: &OfdmConfig) -> Result<TimeDomainFrame> {
    if frame.stage != Stage::Bipolar {
        return Err(Error::WrongStage {
            found: frame.stage,
            required: Stage::Bipolar,
        });
    }
    let bias = match cfg.scheme {
        Scheme::Aco => 0.0,
        Scheme::Dco => cfg.beta() * frame.mean_square().sqrt(),
    };
    Ok(TimeDomainFrame::new(
        frame.samples.iter().map(|&x| (x + bias).max(0.0)).collect(),
        Stage::Clipped,
    ))
}

/// Scales a clipped frame to unit mean. Returns the frame and the scale
/// factor that was multiplied in.
pub fn normalize_unit_mean(frame: &TimeDomainFrame) -> Result<(TimeDomainFrame, f64)> {
    if frame.stage != Stage::Clipped {
        return Err(Error::WrongStage {
            found: frame.stage,
            required: Stage::Clipped,
        });
    }
    let mean = frame.mean();
    if !(mean > 0.0) {
        return Err(Error::DegenerateFrame);
    }
    let scale = 1.0 / mean;
    Ok((
        TimeDomainFrame::new(
            frame.samples.iter().map(|x| x * scale).collect(),
            Stage::Normalized,
        ),
        scale,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn modem(scheme: Scheme, m: usize, n: usize) -> Modem {
        Modem::new(OfdmConfig::new(scheme, m, n, 7.0, 1e-6).unwrap()).unwrap()
    }

    /// Direct O(N^2) DFT, used only as a test oracle.
    fn naive_idft(bins: &[Complex64]) -> Vec<Complex64> {
        let n = bins.len();
        (0..n)
            .map(|t| {
                bins.iter()
                    .enumerate()
                    .map(|(k, b)| {
                        let ang = 2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                        b * Complex64::from_polar(1.0, ang)
                    })
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect()
    }

    fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<bool> {
        (0..n).map(|_| rng.random()).collect()
    }

    #[test]
    fn qam4_gray_table() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = qam_modulate(&[false, false, false, true, true, false, true, true], 4).unwrap();
        for (got, want) in f
            .symbols
            .iter()
            .zip([c(s, s), c(s, -s), c(-s, s), c(-s, -s)])
        {
            assert!((got - want).norm() < 1e-15);
        }
    }

    #[test]
    fn constellations_have_unit_energy_and_round_trip() {
        for m in [4usize, 16, 64, 256, 1024] {
            let qam = Qam::new(m).unwrap();
            let pts: Vec<_> = (0..m).map(|l| qam.point(l)).collect();
            let energy = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
            assert!((energy - 1.0).abs() < 1e-12, "M={m}: {energy}");
            let frame = QamSymbolFrame {
                symbols: pts.clone(),
            };
            let bits = qam.detect(&frame);
            let back = qam.modulate(&bits).unwrap();
            assert_eq!(back.symbols, pts);
            // All distinct.
            for i in 0..m {
                for j in 0..i {
                    assert!((pts[i] - pts[j]).norm() > 1e-9);
                }
            }
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        let qam = Qam::new(16).unwrap();
        for a in 0..16usize {
            for b in 0..16usize {
                let d = (qam.point(a) - qam.point(b)).norm();
                let min_d = 2.0 * qam.scale;
                if (d - min_d).abs() < 1e-12 {
                    assert_eq!((a ^ b).count_ones(), 1, "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn qam16_statistical_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = qam_modulate(&random_bits(&mut rng, 4096), 16).unwrap();
        assert_eq!(f.symbols.len(), 1024);
        let e = f.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / 1024.0;
        assert!((e - 1.0).abs() < 0.1, "{e}");
    }

    #[test]
    fn wrong_bit_count_is_rejected() {
        assert!(matches!(
            qam_modulate(&[true; 5], 16),
            Err(Error::BitLength {
                len: 5,
                bits_per_symbol: 4
            })
        ));
    }

    #[test]
    fn origin_ties_to_smallest_label() {
        let bits = qam_detect(
            &QamSymbolFrame {
                symbols: vec![c(0.0, 0.0)],
            },
            4,
        )
        .unwrap();
        assert_eq!(bits, vec![false, false]);
        // 16-QAM: 0 lies between the two inner levels (+1 label 01, -1 label 11).
        let bits = qam_detect(
            &QamSymbolFrame {
                symbols: vec![c(0.0, 0.0)],
            },
            16,
        )
        .unwrap();
        assert_eq!(bits, vec![false, true, false, true]);
    }

    #[test]
    fn aco_and_dco_layouts() {
        let (s1, s2, s3) = (c(1.0, 2.0), c(-3.0, 0.5), c(0.25, -1.0));
        let z = c(0.0, 0.0);
        let aco = modem(Scheme::Aco, 4, 8)
            .assemble_subcarriers(&QamSymbolFrame {
                symbols: vec![s1, s2],
            })
            .unwrap();
        assert_eq!(aco.bins, vec![z, s1, z, s2, z, s2.conj(), z, s1.conj()]);
        let dco = modem(Scheme::Dco, 4, 8)
            .assemble_subcarriers(&QamSymbolFrame {
                symbols: vec![s1, s2, s3],
            })
            .unwrap();
        assert_eq!(
            dco.bins,
            vec![z, s1, s2, s3, z, s3.conj(), s2.conj(), s1.conj()]
        );
        assert!(matches!(
            modem(Scheme::Aco, 4, 8).assemble_subcarriers(&QamSymbolFrame { symbols: vec![s1] }),
            Err(Error::SymbolCount {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn time_domain_matches_naive_dft_and_is_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for scheme in [Scheme::Aco, Scheme::Dco] {
            let m = modem(scheme, 16, 8);
            let bits = random_bits(&mut rng, m.config().bits_per_frame());
            let freq = m
                .assemble_subcarriers(&m.qam().modulate(&bits).unwrap())
                .unwrap();
            let t = m.to_time_domain(&freq).unwrap();
            let naive = naive_idft(&freq.bins);
            for (a, b) in t.samples.iter().zip(&naive) {
                assert!((a - b.re).abs() < 1e-12);
                assert!(b.im.abs() < 1e-9);
            }
            if scheme == Scheme::Aco {
                for k in 0..4 {
                    assert!((t.samples[k] + t.samples[k + 4]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_bins_give_zero_samples() {
        let m = modem(Scheme::Dco, 4, 16);
        let t = m
            .to_time_domain(&FrequencyFrame {
                bins: vec![c(0.0, 0.0); 16],
            })
            .unwrap();
        assert!(t.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = modem(Scheme::Dco, 4, 8);
        let mut bins = vec![c(0.0, 0.0); 8];
        bins[1] = c(1.0, 1.0);
        assert!(matches!(
            m.to_time_domain(&FrequencyFrame { bins }),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn bias_coefficients() {
        assert!((bias_beta(7.0) - 2.0030).abs() < 1e-3);
        assert!((bias_beta(13.0) - 4.3535).abs() < 1e-3);
    }

    #[test]
    fn clipping_and_normalisation_examples() {
        let cfg = OfdmConfig::new(Scheme::Aco, 4, 8, 0.0, 1e-6).unwrap();
        let f = TimeDomainFrame::new(vec![-1.0, 2.0, -3.0, 4.0], Stage::Bipolar);
        let clipped = apply_bias_and_clip(&f, &cfg).unwrap();
        assert_eq!(clipped.samples, vec![0.0, 2.0, 0.0, 4.0]);
        let (norm, scale) = normalize_unit_mean(&clipped).unwrap();
        assert_relative_eq!(scale, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(norm.samples[1], 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(norm.samples[3], 8.0 / 3.0, max_relative = 1e-15);

        let unit = TimeDomainFrame::new(vec![0.5, 1.5, 1.0, 1.0], Stage::Clipped);
        let (same, s) = normalize_unit_mean(&unit).unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(same.samples, unit.samples);

        let zeros = TimeDomainFrame::new(vec![0.0; 4], Stage::Clipped);
        assert_eq!(
            normalize_unit_mean(&zeros).unwrap_err(),
            Error::DegenerateFrame
        );
    }

    #[test]
    fn dco_bias_uses_frame_rms() {
        let cfg = OfdmConfig::new(Scheme::Dco, 4, 8, 7.0, 1e-6).unwrap();
        let f = TimeDomainFrame::new(vec![-1.0, 1.0, -1.0, 1.0], Stage::Bipolar);
        let out = apply_bias_and_clip(&f, &cfg).unwrap();
        let b = bias_beta(7.0);
        assert_relative_eq!(out.samples[0], b - 1.0, max_relative = 1e-14);
        assert_relative_eq!(out.samples[1], b + 1.0, max_relative = 1e-14);
    }

    #[test]
    fn large_aco_batch_normalises_to_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = modem(Scheme::Aco, 16, 2048);
        let mut acc = 0.0;
        let frames = 20;
        for _ in 0..frames {
            let bits = random_bits(&mut rng, m.config().bits_per_frame());
            let (f, _) = m.transmit(&bits).unwrap();
            assert!(f.samples.iter().all(|&x| x >= 0.0));
            acc += f.mean();
        }
        assert!((acc / frames as f64 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn demodulation_recovers_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // ACO: clipping noise falls on even bins only.
        for n in [8usize, 64, 2048] {
            let m = modem(Scheme::Aco, 16, n);
            let bits = random_bits(&mut rng, m.config().bits_per_frame());
            let syms = m.qam().modulate(&bits).unwrap();
            let t = m
                .to_time_domain(&m.assemble_subcarriers(&syms).unwrap())
                .unwrap();
            let clipped = m.apply_bias_and_clip(&t).unwrap();
            let back = m.demodulate(&clipped.samples).unwrap();
            for (a, b) in back.symbols.iter().zip(&syms.symbols) {
                assert!((a - b).norm() < 1e-9);
            }
        }
        // DCO without clipping: remove the bias again (it only touches bin 0).
        let m = modem(Scheme::Dco, 64, 256);
        let bits = random_bits(&mut rng, m.config().bits_per_frame());
        let syms = m.qam().modulate(&bits).unwrap();
        let t = m
            .to_time_domain(&m.assemble_subcarriers(&syms).unwrap())
            .unwrap();
        let biased: Vec<f64> = t.samples.iter().map(|x| x + 10.0).collect();
        let back = m.demodulate(&biased).unwrap();
        for (a, b) in back.symbols.iter().zip(&syms.symbols) {
            assert!((a - b).norm() < 1e-9);
        }
        let zeros = m.demodulate(&vec![0.0; 256]).unwrap();
        assert!(zeros.symbols.iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn qam4_awgn_ber_matches_closed_form() {
        // Q(sqrt(Es/N0)) = 1e-3 for Gray 4-QAM; per-axis noise variance N0/2.
        let target = 1e-3;
        let arg = crate::special::q_inv(target);
        let n0 = 1.0 / (arg * arg);
        let sd = (n0 / 2.0).sqrt();
        let normal = rand_distr::Normal::new(0.0, sd).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let qam = Qam::new(4).unwrap();
        let n_bits = 2_000_000usize;
        let bits = random_bits(&mut rng, n_bits);
        let mut f = qam.modulate(&bits).unwrap();
        for s in f.symbols.iter_mut() {
            *s += c(rng.sample(normal), rng.sample(normal));
        }
        let errs = qam
            .detect(&f)
            .iter()
            .zip(&bits)
            .filter(|(a, b)| a != b)
            .count() as f64;
        let sigma = (target * (1.0 - target) / n_bits as f64).sqrt() * n_bits as f64;
        assert!(
            (errs - target * n_bits as f64).abs() < 3.0 * sigma,
            "errors {errs}"
        );
    }
}
