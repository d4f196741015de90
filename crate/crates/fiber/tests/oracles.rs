use fourd_core::constellation::FormatKind;
use fourd_core::infometrics::{batch_rng, gmi_estimate};
use fourd_core::{SampledWaveform, C64};
use fourd_fiber::rx::{ase_limited_snr_db, equalize_center_channel};
use fourd_fiber::ssfm::{propagate_tapped, ChannelRecord};
use fourd_fiber::tx::band_power;
use fourd_fiber::{
    receive_center_channel, ssfm_propagate, wdm_transmit, DgdModel, FiberError, LinkConfig, RxOptions, WdmConfig,
};
use rand::Rng;
use rand_distr::StandardNormal;

fn small_wdm(channels: usize, power_dbm: f64) -> WdmConfig {
    WdmConfig { n_channels: channels, n_symbols: 1 << 11, launch_power_dbm: power_dbm, ..WdmConfig::default() }
}

fn short_link() -> LinkConfig {
    LinkConfig { n_spans: 2, ..LinkConfig::default() }
}

fn energy(w: &SampledWaveform) -> f64 {
    w.x.iter().chain(&w.y).map(|v| v.norm_sqr()).sum()
}

fn evm(link: &LinkConfig, wdm: &WdmConfig, kind: FormatKind) -> f64 {
    let c = kind.build_default();
    let (w, tx) = wdm_transmit(&vec![c; wdm.n_channels], wdm).unwrap();
    let (out, rec) = ssfm_propagate(&w, link, 5).unwrap();
    let r = equalize_center_channel(&out, &rec, &tx, wdm, &RxOptions::default()).unwrap();
    let s = tx.center_channel().symbols();
    let (mut e, mut p) = (0.0, 0.0);
    for (a, b) in r.iter().zip(&s) {
        e += a.sq_dist(b);
        p += b.energy();
    }
    (e / p).sqrt()
}

#[test]
fn lossless_linear_propagation_is_unitary() {
    let link = LinkConfig { gamma: 0.0, alpha_db: 0.0, ase: false, ..short_link() };
    let wdm = small_wdm(3, 0.0);
    let (w, _) = wdm_transmit(&vec![FormatKind::Rs64.build_default(); 3], &wdm).unwrap();
    let (out, _) = ssfm_propagate(&w, &link, 2).unwrap();
    let rel = (energy(&out) / energy(&w) - 1.0).abs();
    assert!(rel < 1e-9, "relative energy change {rel:e}");
}

#[test]
fn genie_receiver_inverts_the_linear_channel() {
    let link = LinkConfig { gamma: 0.0, ase: false, ..short_link() };
    for kind in FormatKind::ALL {
        let e = evm(&link, &small_wdm(3, 0.0), kind);
        assert!(e < 1e-3, "{} EVM {e:e}", kind.name());
    }
}

#[test]
fn genie_receiver_handles_strong_pmd() {
    let link = LinkConfig { gamma: 0.0, ase: false, pmd_coeff: 0.5, ..short_link() };
    let e = evm(&link, &small_wdm(1, 0.0), FormatKind::Rs64);
    assert!(e < 1e-3, "EVM {e:e}");
}

/// Nonlinear phase of a CW field: the random waveplate rotations are removed
/// by comparing with the same link at zero nonlinearity.
fn cw_phase(link: &LinkConfig, p: f64) -> (f64, f64) {
    let n = 256;
    let w = SampledWaveform {
        x: vec![C64::new(p.sqrt(), 0.0); n],
        y: vec![C64::new(0.0, 0.0); n],
        sample_rate: 100.0,
        center_freq_offset: 0.0,
    };
    let (nl, _) = ssfm_propagate(&w, link, 1).unwrap();
    let (lin, _) = ssfm_propagate(&w, &LinkConfig { gamma: 0.0, ..link.clone() }, 1).unwrap();
    let phases: Vec<f64> = (0..n).map(|i| (nl.x[i] * lin.x[i].conj() + nl.y[i] * lin.y[i].conj()).arg()).collect();
    let spread = phases.iter().fold(0.0f64, |m, a| m.max((a - phases[0]).abs()));
    (phases[0], spread)
}

#[test]
fn cw_self_phase_modulation_matches_closed_form() {
    let p = 5e-3;
    let base = LinkConfig {
        dispersion: 0.0,
        pmd_coeff: 0.0,
        ase: false,
        n_spans: 1,
        waveplates_per_span: 5,
        ..LinkConfig::default()
    };
    let steps = (base.waveplates_per_span * base.steps_per_waveplate) as f64;

    let lossless = LinkConfig { alpha_db: 0.0, ..base.clone() };
    let (phi, spread) = cw_phase(&lossless, p);
    let expect = lossless.gamma_manakov() * p * lossless.span_length_km;
    assert!((phi - expect).abs() < 1e-6 * steps, "{phi} vs {expect}");
    assert!(spread < 1e-9, "{spread:e}");

    // With loss the phase follows the effective length.
    let a = base.alpha_per_km();
    let l_eff = (1.0 - (-a * base.span_length_km).exp()) / a;
    let (phi, _) = cw_phase(&base, p);
    let expect = base.gamma_manakov() * p * l_eff;
    assert!((phi - expect).abs() < 1e-6 * steps, "{phi} vs {expect}");
}

#[test]
fn halving_the_step_converges() {
    let wdm = small_wdm(3, 3.0);
    let (w, _) = wdm_transmit(&vec![FormatKind::Pdm8QamStar.build_default(); 3], &wdm).unwrap();
    let link = LinkConfig { ase: false, ..short_link() };
    let (a, _) = ssfm_propagate(&w, &link, 3).unwrap();
    let (b, _) =
        ssfm_propagate(&w, &LinkConfig { steps_per_waveplate: 2 * link.steps_per_waveplate, ..link }, 3).unwrap();
    let diff: f64 = a.x.iter().zip(&b.x).chain(a.y.iter().zip(&b.y)).map(|(u, v)| (u - v).norm_sqr()).sum();
    let rel = (diff / energy(&b)).sqrt();
    assert!(rel < 1e-4, "relative RMS change {rel:e}");
}

#[test]
fn too_few_steps_are_rejected() {
    let wdm = small_wdm(3, 20.0);
    let (w, _) = wdm_transmit(&vec![FormatKind::Rs64.build_default(); 3], &wdm).unwrap();
    let link = LinkConfig { steps_per_waveplate: 1, ..short_link() };
    assert!(matches!(ssfm_propagate(&w, &link, 1), Err(FiberError::StepAccuracy { .. })));
}

#[test]
fn low_power_gmi_matches_awgn_at_ase_snr() {
    let wdm = WdmConfig { n_symbols: 1 << 14, launch_power_dbm: -19.0, ..WdmConfig::default() };
    let link = short_link();
    let snr = ase_limited_snr_db(&link, &wdm, link.n_spans);
    for kind in [FormatKind::Rs64, FormatKind::Pdm8QamStar] {
        let c = kind.build_default();
        let (w, tx) = wdm_transmit(&vec![c.clone(); 3], &wdm).unwrap();
        let (out, rec) = ssfm_propagate(&w, &link, 11).unwrap();
        let r = receive_center_channel(&out, &rec, &tx, &wdm, &RxOptions::default()).unwrap();
        let awgn = gmi_estimate(&c, snr, 200_000, 4).unwrap();
        assert!((r.gmi - awgn.gmi).abs() < 0.1, "{}: fiber {} vs AWGN {} at {snr:.2} dB", kind.name(), r.gmi, awgn.gmi);
        assert!((r.snr_elec_db - snr).abs() < 0.3, "SNR {} vs {snr}", r.snr_elec_db);
    }
}

#[test]
fn back_to_back_at_high_snr() {
    let wdm = small_wdm(1, 0.0);
    let link = LinkConfig { n_spans: 0, ..short_link() };
    let c = FormatKind::Rs64.build_default();
    let (mut w, tx) = wdm_transmit(std::slice::from_ref(&c), &wdm).unwrap();
    // White noise giving 30 dB in the symbol-rate bandwidth.
    let v = wdm.launch_power_w() * wdm.samples_per_symbol as f64 / (2.0 * 1e3);
    let mut rng = batch_rng(8, 0);
    for s in w.x.iter_mut().chain(w.y.iter_mut()) {
        let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        *s += C64::new(a, b) * (v / 2.0).sqrt();
    }
    let (out, rec) = ssfm_propagate(&w, &link, 1).unwrap();
    let opts = RxOptions::default().with_reference(&c, 50_000, 3).unwrap();
    let r = receive_center_channel(&out, &rec, &tx, &wdm, &opts).unwrap();
    assert!(r.pre_fec_ber < 1e-4, "BER {}", r.pre_fec_ber);
    assert!(r.gmi > 5.99, "GMI {}", r.gmi);
    assert!((r.snr_elec_db - 30.0).abs() < 0.3);
    assert!(r.system_margin_db > 15.0);
}

#[test]
fn mean_dgd_follows_pmd_coefficient() {
    for model in [DgdModel::Fixed, DgdModel::Gaussian { rel_std: 0.3 }] {
        let link = LinkConfig { dgd_model: model, ..LinkConfig::default() };
        let n = 400;
        let mean: f64 = (0..n).map(|s| ChannelRecord::draw(&link, s).dgd_at(0.0)).sum::<f64>() / n as f64;
        let expect = link.pmd_coeff * link.total_length_km().sqrt();
        assert!((mean / expect - 1.0).abs() < 0.1, "{model:?}: {mean} vs {expect}");
    }
}

#[test]
fn channel_powers_match_launch_power() {
    let wdm = small_wdm(3, 1.5);
    let (w, tx) = wdm_transmit(&vec![FormatKind::TwoA8psk.build_default(); 3], &wdm).unwrap();
    let half = wdm.spacing_ghz / 2.0;
    for ch in &tx.channels {
        let p = band_power(&w, ch.offset_ghz - half, ch.offset_ghz + half);
        let db = 10.0 * (p / 1e-3).log10();
        assert!((db - 1.5).abs() < 0.05, "{db} dBm");
    }
}

#[test]
fn single_channel_spectrum_is_confined() {
    let wdm = small_wdm(1, 0.0);
    let (w, _) = wdm_transmit(&[FormatKind::Prs64.build_default()], &wdm).unwrap();
    let edge = wdm.baud_gbaud * (1.0 + wdm.rolloff) / 2.0;
    let fs = wdm.sample_rate_ghz();
    let total = band_power(&w, -fs, fs);
    let outside = total - band_power(&w, -edge, edge);
    assert!(outside / total < 1e-4, "{:e}", outside / total);
}

#[test]
fn amplifiers_restore_span_loss() {
    let wdm = small_wdm(3, 4.0);
    let (w, _) = wdm_transmit(&vec![FormatKind::Rs64.build_default(); 3], &wdm).unwrap();
    let link = LinkConfig { ase: false, n_spans: 4, waveplates_per_span: 5, ..LinkConfig::default() };
    let p0 = w.mean_power();
    propagate_tapped(&w, &link, 1, |_, f| {
        let db = 10.0 * (f.mean_power() / p0).log10();
        assert!(db.abs() < 0.1, "{db} dB");
        Ok(())
    })
    .unwrap();
}

#[test]
fn propagation_is_deterministic() {
    let wdm = small_wdm(3, 2.0);
    let (w, _) = wdm_transmit(&vec![FormatKind::Rs64.build_default(); 3], &wdm).unwrap();
    let (a, ra) = ssfm_propagate(&w, &short_link(), 9).unwrap();
    let (b, rb) = ssfm_propagate(&w, &short_link(), 9).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.y, b.y);
    assert_eq!(ra, rb);
}
