use fourd_core::constellation::FormatKind;
use fourd_core::impairments::{
    dac_sweep, evm, impaired_rates, worst_case_gmi, DacChannel, DacConfig, MzmImbalance, NoiseReference, SearchBudget,
};
use fourd_core::infometrics::NoiseBank;

fn exhaustive(samples: usize) -> SearchBudget {
    SearchBudget {
        screen_samples: samples,
        final_samples: samples,
        refine_top: usize::MAX,
        seed: 9,
        noise_reference: NoiseReference::Distorted,
    }
}

#[test]
fn nominal_modulator_is_transparent() {
    let c = FormatKind::Rs64.build_default();
    let bank = NoiseBank::new(20_000, 1).unwrap();
    let a = impaired_rates(&bank, &c, &MzmImbalance::NOMINAL, 8.0, NoiseReference::Distorted).unwrap().gmi();
    let b = bank.snr_point(&c, 8.0).unwrap();
    assert!((a.0 - b.gmi).abs() < 1e-12);
}

#[test]
fn worst_case_never_exceeds_nominal() {
    for k in FormatKind::FOUR_D {
        let w = worst_case_gmi(&k.build_default(), 8.0, 2.0, 0.2, (1.0, 0.1), &exhaustive(20_000)).unwrap();
        assert!(w.min_gmi <= w.nominal_gmi, "{}", k.name());
        assert!(w.fluctuation() >= 0.0);
    }
}

#[test]
fn worst_case_is_monotone_in_grid_extent() {
    let c = FormatKind::TwoA8psk.build_default();
    let small = worst_case_gmi(&c, 8.0, 2.0, 0.2, (2.0, 0.2), &exhaustive(20_000)).unwrap();
    let large = worst_case_gmi(&c, 8.0, 4.0, 0.4, (2.0, 0.2), &exhaustive(20_000)).unwrap();
    assert!(large.cells > small.cells);
    assert!(large.min_gmi <= small.min_gmi, "{} > {}", large.min_gmi, small.min_gmi);
    assert_eq!(large.nominal_gmi, small.nominal_gmi);
}

#[test]
fn mirrored_angle_errors_are_nearly_equivalent() {
    let bank = NoiseBank::new(50_000, 3).unwrap();
    for k in FormatKind::ALL {
        let c = k.build_default();
        for (dx, dy, a) in [(3.0, -2.0, 0.3), (5.0, 5.0, 0.0), (-4.0, 1.0, 0.5)] {
            let m = MzmImbalance { theta_x: 90.0 + dx, theta_y: 90.0 + dy, alpha_x_db: a, alpha_y_db: 0.0 };
            let r = MzmImbalance { theta_x: 90.0 - dx, theta_y: 90.0 - dy, ..m };
            let g = impaired_rates(&bank, &c, &m, 8.0, NoiseReference::Distorted).unwrap().gmi().0;
            let h = impaired_rates(&bank, &c, &r, 8.0, NoiseReference::Distorted).unwrap().gmi().0;
            assert!((g - h).abs() < 0.02, "{} ({dx},{dy}): {g} vs {h}", k.name());
        }
    }
}

#[test]
fn ideal_dac_reconstructs_symbols() {
    let c = FormatKind::Prs64.build_default();
    let ch = DacChannel::new(&c, None, 16_384, 2).unwrap();
    let bank = NoiseBank::new(16_384, 2).unwrap();
    let ideal: Vec<_> = bank.labels().iter().map(|&l| c.points()[l as usize]).collect();
    let e = evm(ch.received(), &ideal);
    // Truncated RRC leaves residual ISI near −58 dB.
    assert!(e < 3e-3, "{e}");
}

#[test]
fn dac_penalty_grows_as_resolution_drops() {
    let c = FormatKind::Rs64.build_default();
    let s = dac_sweep(&c, &[8, 5, 4, 3], &DacConfig::default(), 5.0, 0.005, 50_000, 4).unwrap();
    let p: Vec<f64> = s.rows.iter().map(|r| r.2).collect();
    assert!(p[0].abs() <= 0.05, "8-bit penalty {}", p[0]);
    assert!(p.windows(2).all(|w| w[1] > w[0] - 0.01), "{p:?}");
    assert!(p[3] > p[2]);
}
