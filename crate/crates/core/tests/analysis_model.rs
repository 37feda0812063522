use proptest::prelude::*;
use spad_ofdm::analysis::{
    analytic_ber, analytic_ber_curve, ber_from_snr, bussgang_expectations_pq, clipped_signal_stats,
    dbm_to_watts, expectations_by_quadrature, snr, PhotonAffineCoeffs, SignalStats,
};
use spad_ofdm::link::{find_thresholds, LinkScenario};
use spad_ofdm::ofdm::{OfdmConfig, Scheme};
use spad_ofdm::quadrature::Tolerance;
use spad_ofdm::spad::{CountMode, DeadTimeKind, SpadArrayConfig};

fn stats(rho: f64, sigma_x: f64) -> SignalStats {
    SignalStats {
        rho,
        sigma_x,
        mean_clipped: 1.0,
        sigma_m: sigma_x,
        bias: 0.0,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pq_closed_forms_match_quadrature(
        rho in 0.0f64..3.0,
        sigma_x in 0.2f64..3.0,
        log_cs in 0.0f64..6.0,
        c_n in 0.0f64..50.0,
        log_ct in -8.0f64..-4.0,
    ) {
        let c = PhotonAffineCoeffs { c_s: 10f64.powf(log_cs), c_n, c_t: 10f64.powf(log_ct) };
        let s = stats(rho, sigma_x);
        let closed = bussgang_expectations_pq(&s, &c);
        let ct = c.c_t;
        let quad = expectations_by_quadrature(&s, &c, |n| n * (-ct * n).exp(), Tolerance::relative(1e-10)).unwrap();
        prop_assert!(rel(closed.e_nz, quad.e_nz) < 1e-6);
        prop_assert!(rel(closed.e_n2, quad.e_n2) < 1e-6);
        prop_assert!(rel(closed.e_z2, quad.e_z2) < 1e-6);
        prop_assert!(rel(closed.e_z, quad.e_z) < 1e-6);
        prop_assert!(rel(closed.e_n, quad.e_n) < 1e-6);
    }

    #[test]
    fn ber_decreases_with_snr(
        m in prop::sample::select(vec![4usize, 16, 64, 256, 1024]),
        a in 0.0f64..1e4,
        b in 0.0f64..1e4,
    ) {
        let r = (m as f64).log2() / 4.0;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (blo, bhi) = (ber_from_snr(lo, r, m), ber_from_snr(hi, r, m));
        prop_assert!(bhi <= blo);
        prop_assert!((0.0..=1.0).contains(&blo));
    }
}

#[test]
fn dead_time_free_models_coincide() {
    let spad = SpadArrayConfig {
        dead_time: 1e-16,
        dcr_hz: 0.0,
        ..SpadArrayConfig::default()
    };
    for scheme in [Scheme::Aco, Scheme::Dco] {
        let cfg = OfdmConfig::new(scheme, 16, 2048, 7.0, 1e-6).unwrap();
        for p in [-80.0, -60.0, -40.0] {
            let pq = snr(
                DeadTimeKind::Pq,
                CountMode::Poisson,
                &cfg,
                &spad,
                dbm_to_watts(p),
            )
            .unwrap();
            let aq = snr(
                DeadTimeKind::Aq,
                CountMode::Poisson,
                &cfg,
                &spad,
                dbm_to_watts(p),
            )
            .unwrap();
            assert!(
                rel(pq.snr, aq.snr) < 1e-3,
                "{scheme} {p}: {} vs {}",
                pq.snr,
                aq.snr
            );
        }
    }
}

#[test]
fn exact_statistics_do_not_hurt_at_low_power() {
    let cfg = OfdmConfig::new(Scheme::Aco, 4, 2048, 0.0, 1e-6).unwrap();
    let spad = SpadArrayConfig::default();
    for kind in [DeadTimeKind::Pq, DeadTimeKind::Aq] {
        let p = dbm_to_watts(-75.0);
        let poisson = snr(kind, CountMode::Poisson, &cfg, &spad, p).unwrap();
        let exact = snr(kind, CountMode::Exact, &cfg, &spad, p).unwrap();
        assert!(exact.snr >= poisson.snr);
        assert!(rel(exact.snr, poisson.snr) < 0.01);
    }
}

#[test]
fn dco_signal_statistics() {
    let s = clipped_signal_stats(&OfdmConfig::new(Scheme::Dco, 4, 2048, 7.0, 1e-6).unwrap());
    assert!((s.sigma_m - 1.4135).abs() < 1e-3);
    assert!((s.bias - 2.8313).abs() < 1e-2);
    assert!(rel(s.rho * s.mean_clipped, s.bias) < 1e-12);
}

#[test]
fn reference_curve_crossings() {
    let s = LinkScenario::reference(Scheme::Aco, 4, 0.0, 1e-3, DeadTimeKind::Pq).unwrap();
    let powers: Vec<f64> = (0..=1200).map(|i| -120.0 + 0.1 * f64::from(i)).collect();
    let curve = analytic_ber_curve(&s, &powers).unwrap();
    let m = find_thresholds(&curve, 1e-3);
    let (mpr, moi) = (m.mpr_dbm.unwrap(), m.moi_dbm.unwrap());
    assert!((moi + 39.6).abs() <= 0.5, "moi {moi}");
    assert!((mpr + 90.7).abs() <= 0.5, "mpr {mpr}");
}

#[test]
fn low_power_flank_is_monotone() {
    let s = LinkScenario::reference(Scheme::Aco, 16, 0.0, 1e-6, DeadTimeKind::Aq).unwrap();
    let mut prev = 1.0;
    for i in 0..60 {
        let b = analytic_ber(&s, -100.0 + 0.5 * f64::from(i)).unwrap();
        assert!(b <= prev);
        prev = b;
    }
}

#[test]
fn pq_saturates_before_aq() {
    for scheme in [Scheme::Aco, Scheme::Dco] {
        let bias = if scheme == Scheme::Dco { 7.0 } else { 0.0 };
        let powers: Vec<f64> = (0..=900).map(|i| -110.0 + 0.1 * f64::from(i)).collect();
        let moi = |kind| {
            let s = LinkScenario::reference(scheme, 4, bias, 1e-3, kind).unwrap();
            find_thresholds(&analytic_ber_curve(&s, &powers).unwrap(), 1e-3)
                .moi_dbm
                .unwrap()
        };
        assert!(moi(DeadTimeKind::Pq) < moi(DeadTimeKind::Aq), "{scheme}");
    }
}
