//! Genie-aided coherent receiver for the center WDM channel.
//!
//! The receiver knows the realized PMD record and the transmitted symbols. It
//! selects the channel, applies the matched RRC filter, compensates chromatic
//! dispersion, inverts the polarization response per frequency bin (MMSE),
//! samples at the symbol instants and removes residual common phase with a
//! data-aided sliding window. Only nonlinear interference and ASE remain.

use crate::config::{LinkConfig, WdmConfig};
use crate::fft::{bin_freq, omega_grid, FftPair};
use crate::ssfm::{adjoint, mat_mul, ChannelRecord, Jones};
use crate::tx::{rrc_response, TxRecord};
use crate::FiberError;
use fourd_core::constellation::{Constellation4D, Point4D};
use fourd_core::infometrics::{rates_from_samples, required_snr_for_ber, Demapper};
use fourd_core::{SampledWaveform, BITS_PER_SYMBOL, C64};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub struct RxOptions {
    /// Symbols in the data-aided phase window (per polarization).
    pub phase_window: usize,
    /// Regularization of the MMSE polarization inverse.
    pub mmse_floor: f64,
    /// Pre-FEC BER threshold defining the system margin.
    pub ber_threshold: f64,
    /// Electrical SNR (dB) at which the format reaches `ber_threshold` on the
    /// AWGN channel. `NaN` leaves the margin undefined.
    pub required_snr_db: f64,
}

impl Default for RxOptions {
    fn default() -> Self {
        RxOptions { phase_window: 64, mmse_floor: 1e-6, ber_threshold: 4e-2, required_snr_db: f64::NAN }
    }
}

impl RxOptions {
    /// Fills `required_snr_db` for `c` from an AWGN Monte Carlo bisection.
    pub fn with_reference(mut self, c: &Constellation4D, n_samples: usize, seed: u64) -> Result<Self, FiberError> {
        self.required_snr_db = required_snr_for_ber(c, self.ber_threshold, 0.01, n_samples, seed)?;
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RxResult {
    pub snr_elec_db: f64,
    pub gmi: f64,
    pub gmi_std_err: f64,
    pub pre_fec_ber: f64,
    pub system_margin_db: f64,
    pub n_symbols: usize,
}

fn inverse_mmse(h: &Jones, eps: f64) -> Jones {
    let hh = adjoint(h);
    let mut g = mat_mul(&hh, h);
    g[0][0] += eps;
    g[1][1] += eps;
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    mat_mul(&inv, &hh)
}

/// Equalized, phase-corrected center-channel symbols of `w`, in the units of
/// the transmitted constellation.
pub fn equalize_center_channel(
    w: &SampledWaveform,
    record: &ChannelRecord,
    tx: &TxRecord,
    wdm: &WdmConfig,
    opts: &RxOptions,
) -> Result<Vec<Point4D>, FiberError> {
    let n = w.len();
    if n != wdm.n_samples() {
        return Err(FiberError::Length { got: n, want: wdm.n_samples() });
    }
    let ch = tx.center_channel();
    let sps = wdm.samples_per_symbol;
    let fs = w.sample_rate;
    let omega = omega_grid(n, fs);
    let length = record.length_km();
    let mut fft = FftPair::new(n);
    let mut x = w.x.clone();
    let mut y = w.y.clone();
    fft.forward(&mut x);
    fft.forward(&mut y);
    let mut zx = vec![C64::new(0.0, 0.0); n];
    let mut zy = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let mf = rrc_response(bin_freq(j, n, fs), wdm.baud_gbaud, wdm.rolloff, sps);
        if mf == 0.0 {
            continue;
        }
        let k = (j as isize + ch.shift_bins).rem_euclid(n as isize) as usize;
        let om = omega[k];
        let cd = C64::from_polar(mf, -0.5 * record.beta2 * om * om * length);
        let m = inverse_mmse(&record.jones(om), opts.mmse_floor);
        zx[j] = cd * (m[0][0] * x[k] + m[0][1] * y[k]);
        zy[j] = cd * (m[1][0] * x[k] + m[1][1] * y[k]);
    }
    fft.inverse(&mut zx);
    fft.inverse(&mut zy);
    let inv = 1.0 / ch.scale;
    let mut r: Vec<Point4D> = (0..wdm.n_symbols).map(|m| Point4D::new(zx[m * sps] * inv, zy[m * sps] * inv)).collect();
    let s = ch.symbols();
    let px = window_phases(&r, &s, opts.phase_window, |p| p.x);
    let py = window_phases(&r, &s, opts.phase_window, |p| p.y);
    for (m, p) in r.iter_mut().enumerate() {
        p.x *= px[m];
        p.y *= py[m];
    }
    Ok(r)
}

/// Unit phasors `conj(e^{jφ_m})` where `φ_m = arg Σ r·conj(s)` over a cyclic
/// window of `len` symbols centered on `m`.
fn window_phases(r: &[Point4D], s: &[Point4D], len: usize, pick: impl Fn(&Point4D) -> C64) -> Vec<C64> {
    let n = r.len();
    let c: Vec<C64> = r.iter().zip(s).map(|(a, b)| pick(a) * pick(b).conj()).collect();
    let len = len.clamp(1, n);
    let start = len / 2;
    let mut acc: C64 = (0..len).map(|i| c[(i + n - start) % n]).sum();
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let phase = if acc.norm() > 0.0 { acc.conj() / acc.norm() } else { C64::new(1.0, 0.0) };
        out.push(phase);
        acc += c[(m + len - start) % n] - c[(m + n - start) % n];
    }
    out
}

/// Receives the center channel and measures SNR, GMI, BER and margin.
pub fn receive_center_channel(
    w: &SampledWaveform,
    record: &ChannelRecord,
    tx: &TxRecord,
    wdm: &WdmConfig,
    opts: &RxOptions,
) -> Result<RxResult, FiberError> {
    let r = equalize_center_channel(w, record, tx, wdm, opts)?;
    let ch = tx.center_channel();
    let c = &ch.constellation;
    let s = ch.symbols();
    let (mut ps, mut pe) = (0.0, 0.0);
    for (a, b) in r.iter().zip(&s) {
        ps += b.energy();
        pe += a.sq_dist(b);
    }
    let snr = ps / pe;
    let sigma2 = pe / (4.0 * r.len() as f64);
    let acc = rates_from_samples(c, sigma2, ch.labels.iter().map(|&l| l as usize).zip(r.iter()))?;
    let (gmi, gmi_std_err) = acc.gmi();
    let d = Demapper::new(c);
    let errors: u32 = r.iter().zip(&ch.labels).map(|(p, &l)| (d.nearest(&p.coords()) ^ l as usize).count_ones()).sum();
    let snr_elec_db = 10.0 * snr.log10();
    Ok(RxResult {
        snr_elec_db,
        gmi,
        gmi_std_err,
        pre_fec_ber: errors as f64 / (BITS_PER_SYMBOL * r.len()) as f64,
        system_margin_db: snr_elec_db - opts.required_snr_db,
        n_symbols: r.len(),
    })
}

/// Electrical SNR (dB) expected from ASE alone in the channel's symbol-rate
/// bandwidth, both polarizations, after `spans` amplifiers.
pub fn ase_limited_snr_db(link: &LinkConfig, wdm: &WdmConfig, spans: usize) -> f64 {
    let noise = 2.0 * link.ase_psd() * spans as f64 * wdm.baud_gbaud * 1e9;
    10.0 * (wdm.launch_power_w() / noise).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_recovers_constant_phase() {
        let s: Vec<Point4D> =
            (0..50).map(|i| Point4D::new(C64::from_polar(1.0, i as f64), C64::new(1.0, 0.0))).collect();
        let rot = C64::from_polar(1.0, 0.7);
        let r: Vec<Point4D> = s.iter().map(|p| Point4D::new(p.x * rot, p.y)).collect();
        for ph in window_phases(&r, &s, 8, |p| p.x) {
            assert!((ph * rot - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn mmse_inverts_unitary() {
        let h = [[C64::new(0.6, 0.0), C64::new(0.0, 0.8)], [C64::new(0.0, 0.8), C64::new(0.6, 0.0)]];
        let p = mat_mul(&inverse_mmse(&h, 0.0), &h);
        assert!((p[0][0] - 1.0).norm() < 1e-12 && p[0][1].norm() < 1e-12);
    }
}
