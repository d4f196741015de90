//! WDM transmitter: per-channel 4D symbols, RRC shaping, frequency placement.

use crate::config::WdmConfig;
use crate::fft::{bin_freq, FftPair};
use crate::FiberError;
use fourd_core::constellation::{Constellation4D, Point4D};
use fourd_core::infometrics::batch_rng;
use fourd_core::{SampledWaveform, C64, CONSTELLATION_SIZE};
use rand::Rng;

/// Transmitted data of one channel.
#[derive(Clone, Debug)]
pub struct ChannelTx {
    pub constellation: Constellation4D,
    pub labels: Vec<u8>,
    /// Realized offset from the simulation center (GHz), on the FFT grid.
    pub offset_ghz: f64,
    /// Whole-bin spectral shift of the channel.
    pub shift_bins: isize,
    /// Amplitude factor between unit-energy-per-polarization symbols and the
    /// matched-filter output at the transmitter.
    pub scale: f64,
}

impl ChannelTx {
    pub fn symbols(&self) -> Vec<Point4D> {
        self.labels.iter().map(|&l| self.constellation.points()[l as usize]).collect()
    }
}

#[derive(Clone, Debug)]
pub struct TxRecord {
    pub channels: Vec<ChannelTx>,
    pub center: usize,
}

impl TxRecord {
    pub fn center_channel(&self) -> &ChannelTx {
        &self.channels[self.center]
    }
}

/// Root-raised-cosine amplitude response at baseband frequency `f` (GHz),
/// scaled so that the squared response equals `sps` in the passband: shaping
/// and matched filtering then return the symbols at the symbol instants.
pub fn rrc_response(f: f64, baud: f64, rolloff: f64, sps: usize) -> f64 {
    let a = f.abs();
    let f1 = baud * (1.0 - rolloff) / 2.0;
    let f2 = baud * (1.0 + rolloff) / 2.0;
    let rc = if a <= f1 {
        1.0
    } else if a >= f2 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI / (baud * rolloff) * (a - f1)).cos())
    };
    (rc * sps as f64).sqrt()
}

/// Seed stream for the data of channel `k`.
pub fn channel_seed_stream(k: usize) -> u64 {
    0x7478_0000 + k as u64
}

/// Draws uniform labels for every channel, RRC-shapes them (circularly, in the
/// frequency domain), shifts each channel to its grid slot by a whole number of
/// FFT bins, scales each to the launch power and sums. Ideal lasers: no phase
/// noise.
pub fn wdm_transmit(formats: &[Constellation4D], wdm: &WdmConfig) -> Result<(SampledWaveform, TxRecord), FiberError> {
    wdm.validate()?;
    if formats.len() != wdm.n_channels {
        return Err(FiberError::Config(format!("{} formats for {} channels", formats.len(), wdm.n_channels)));
    }
    let n = wdm.n_samples();
    let sps = wdm.samples_per_symbol;
    let fs = wdm.sample_rate_ghz();
    let mut fft = FftPair::new(n);
    let shaping: Vec<f64> =
        (0..n).map(|k| rrc_response(bin_freq(k, n, fs), wdm.baud_gbaud, wdm.rolloff, sps)).collect();
    let p = wdm.launch_power_w();
    let mut sum_x = vec![C64::new(0.0, 0.0); n];
    let mut sum_y = vec![C64::new(0.0, 0.0); n];
    let mut channels = Vec::with_capacity(wdm.n_channels);
    for (k, c) in formats.iter().enumerate() {
        let mut rng = batch_rng(wdm.seed, channel_seed_stream(k));
        let labels: Vec<u8> = (0..wdm.n_symbols).map(|_| rng.random_range(0..CONSTELLATION_SIZE) as u8).collect();
        let mut x = vec![C64::new(0.0, 0.0); n];
        let mut y = vec![C64::new(0.0, 0.0); n];
        for (m, &l) in labels.iter().enumerate() {
            let pt = c.points()[l as usize];
            x[m * sps] = pt.x;
            y[m * sps] = pt.y;
        }
        fft.forward(&mut x);
        fft.forward(&mut y);
        let mut energy = 0.0;
        for i in 0..n {
            x[i] *= shaping[i];
            y[i] *= shaping[i];
            energy += x[i].norm_sqr() + y[i].norm_sqr();
        }
        // Parseval: mean time-domain power is Σ|X|² / n².
        let power = energy / (n as f64 * n as f64);
        let scale = (p / power).sqrt();
        let shift = (wdm.channel_offset_ghz(k) * n as f64 / fs).round() as isize;
        for i in 0..n {
            let j = (i as isize + shift).rem_euclid(n as isize) as usize;
            sum_x[j] += x[i] * scale;
            sum_y[j] += y[i] * scale;
        }
        channels.push(ChannelTx {
            constellation: c.clone(),
            labels,
            offset_ghz: shift as f64 * fs / n as f64,
            shift_bins: shift,
            scale,
        });
    }
    fft.inverse(&mut sum_x);
    fft.inverse(&mut sum_y);
    let w = SampledWaveform { x: sum_x, y: sum_y, sample_rate: fs, center_freq_offset: 0.0 };
    Ok((w, TxRecord { channels, center: wdm.center_channel() }))
}

/// Power (W) of `w` inside `[lo, hi]` GHz, by integrating the periodogram.
pub fn band_power(w: &SampledWaveform, lo_ghz: f64, hi_ghz: f64) -> f64 {
    let n = w.len();
    let mut fft = FftPair::new(n);
    let mut x = w.x.clone();
    let mut y = w.y.clone();
    fft.forward(&mut x);
    fft.forward(&mut y);
    let mut e = 0.0;
    for k in 0..n {
        let f = bin_freq(k, n, w.sample_rate);
        if f >= lo_ghz && f <= hi_ghz {
            e += x[k].norm_sqr() + y[k].norm_sqr();
        }
    }
    e / (n as f64 * n as f64)
}
