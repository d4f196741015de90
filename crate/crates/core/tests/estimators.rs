use fourd_core::constellation::FormatKind;
use fourd_core::infometrics::{gmi_estimate, gmi_sweep, mi_estimate, required_snr, NoiseBank};

#[test]
fn mi_bounds_gmi() {
    for k in FormatKind::ALL {
        let c = k.build_default();
        for snr in [2.0, 8.0, 14.0] {
            let p = mi_estimate(&c, snr, 50_000, 5).unwrap();
            assert!(p.mi.unwrap() >= p.gmi - 1e-9, "{} at {snr} dB: MI {:?} < GMI {}", k.name(), p.mi, p.gmi);
        }
    }
}

#[test]
fn std_err_shrinks_as_root_n() {
    let c = FormatKind::Rs64.build_default();
    let a = gmi_estimate(&c, 8.0, 25_000, 2).unwrap();
    let b = gmi_estimate(&c, 8.0, 100_000, 2).unwrap();
    let ratio = a.std_err / b.std_err;
    assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
}

#[test]
fn gmi_increases_with_snr_under_common_noise() {
    for k in FormatKind::ALL {
        let grid: Vec<f64> = (0..=24).map(|i| -4.0 + i as f64).collect();
        let pts = gmi_sweep(&k.build_default(), &grid, 20_000, 8).unwrap();
        for w in pts.windows(2) {
            assert!(
                w[1].gmi > w[0].gmi,
                "{}: {} dB {} vs {} dB {}",
                k.name(),
                w[0].snr_db,
                w[0].gmi,
                w[1].snr_db,
                w[1].gmi
            );
        }
        assert!(pts.iter().all(|p| (0.0..=6.0).contains(&p.gmi)));
    }
}

#[test]
fn required_snr_lands_on_the_target() {
    let c = FormatKind::Prs64.build_default();
    let r = required_snr(&c, 4.8, 1e-3, 50_000, 4).unwrap();
    let bank = NoiseBank::new(50_000, 4).unwrap();
    let at = bank.snr_point(&c, r.snr_db).unwrap();
    assert!((at.gmi - 4.8).abs() < 2e-3, "{}", at.gmi);
    assert!(!r.at_lower_bound);
}

#[test]
fn independent_seeds_agree_within_error() {
    let c = FormatKind::TwoA8psk.build_default();
    let a = gmi_estimate(&c, 6.0, 100_000, 10).unwrap();
    let b = gmi_estimate(&c, 6.0, 100_000, 11).unwrap();
    assert_ne!(a.gmi, b.gmi);
    assert!((a.gmi - b.gmi).abs() < 5.0 * (a.std_err.hypot(b.std_err)));
}
