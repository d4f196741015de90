//! Transmitter impairments: MZM I-Q gain/quadrature imbalance and finite DAC
//! resolution on RRC-shaped waveforms.

use crate::constellation::{Constellation4D, Point4D};
use crate::infometrics::{
    noise_variance, required_snr_with, InfoError, NoiseBank, RateAccumulator, RequiredSnr, REFERENCE_ENERGY,
};
use crate::waveform::SampledWaveform;
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ImpairmentError {
    #[error("rail {0} is identically zero; the quantizer range is undefined")]
    ZeroRail(&'static str),
    #[error("invalid DAC configuration: {0}")]
    Dac(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// Per-polarization MZM settings. Angles in degrees (nominal 90), gains in dB
/// of I over Q (nominal 0, applied as `α = 10^(−dB/20)` on Q).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MzmImbalance {
    pub theta_x: f64,
    pub theta_y: f64,
    pub alpha_x_db: f64,
    pub alpha_y_db: f64,
}

impl Default for MzmImbalance {
    fn default() -> Self {
        MzmImbalance::NOMINAL
    }
}

impl MzmImbalance {
    pub const NOMINAL: MzmImbalance = MzmImbalance { theta_x: 90.0, theta_y: 90.0, alpha_x_db: 0.0, alpha_y_db: 0.0 };

    /// Same deviation on both polarizations.
    pub fn symmetric(theta_dev: f64, gain_db: f64) -> Self {
        MzmImbalance { theta_x: 90.0 + theta_dev, theta_y: 90.0 + theta_dev, alpha_x_db: gain_db, alpha_y_db: gain_db }
    }

    fn field(v: C64, theta_deg: f64, alpha_db: f64) -> C64 {
        if theta_deg == 90.0 && alpha_db == 0.0 {
            return v;
        }
        let alpha = 10f64.powf(-alpha_db / 20.0);
        C64::new(v.re, 0.0) + C64::from_polar(alpha, theta_deg.to_radians()) * v.im
    }

    pub fn apply_point(&self, p: &Point4D) -> Point4D {
        Point4D::new(Self::field(p.x, self.theta_x, self.alpha_x_db), Self::field(p.y, self.theta_y, self.alpha_y_db))
    }

    fn key(&self) -> [f64; 4] {
        [self.theta_x, self.theta_y, self.alpha_x_db, self.alpha_y_db]
    }
}

/// `E = I + α·e^{jθ}·Q` on each polarization. Labels are kept and the result
/// is not re-normalized.
pub fn apply_mzm(c: &Constellation4D, imb: &MzmImbalance) -> Constellation4D {
    c.clone().map_points(|p| imb.apply_point(&p))
}

/// Reference energy for the channel noise when a constellation is distorted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseReference {
    /// Noise set from the undistorted mean energy (2 for normalized formats):
    /// the distortion also costs signal power.
    Nominal,
    /// Noise set from the distorted constellation's own mean energy, i.e. the
    /// SNR refers to the symbols actually transmitted.
    #[default]
    Distorted,
}

/// Smallest screening sample count accepted by [`worst_case_gmi`].
pub const MIN_SCREEN_SAMPLES: usize = 1024;

/// Monte Carlo settings shared by the grid searches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Samples per cell in the screening pass (at least [`MIN_SCREEN_SAMPLES`]).
    pub screen_samples: usize,
    /// Samples for re-evaluating the best screening candidates.
    pub final_samples: usize,
    /// Number of screening candidates re-evaluated.
    pub refine_top: usize,
    pub seed: u64,
    pub noise_reference: NoiseReference,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            screen_samples: 4096,
            final_samples: 200_000,
            refine_top: 16,
            seed: 1,
            noise_reference: NoiseReference::Distorted,
        }
    }
}

/// GMI of `c` distorted by `imb`, detected with a receiver that knows the
/// distorted constellation.
pub fn impaired_rates(
    bank: &NoiseBank,
    c: &Constellation4D,
    imb: &MzmImbalance,
    snr_db: f64,
    reference: NoiseReference,
) -> Result<RateAccumulator, InfoError> {
    let d = apply_mzm(c, imb);
    let energy = match reference {
        NoiseReference::Nominal => REFERENCE_ENERGY,
        NoiseReference::Distorted => d.mean_energy(),
    };
    let tx: Vec<[f64; 4]> = d.points().iter().map(Point4D::coords).collect();
    bank.rates(&tx, &d, noise_variance(energy, snr_db))
}

/// Outcome of [`worst_case_gmi`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WorstCase {
    pub min_gmi: f64,
    pub std_err: f64,
    pub argmin: MzmImbalance,
    pub nominal_gmi: f64,
    pub cells: usize,
}

impl WorstCase {
    /// Nominal minus worst-case GMI.
    pub fn fluctuation(&self) -> f64 {
        self.nominal_gmi - self.min_gmi
    }
}

/// `0, step, 2·step, …` up to `max` inclusive (within a 1e-9 slack).
pub fn axis(max: f64, step: f64) -> Result<Vec<f64>, ImpairmentError> {
    if !(max >= 0.0 && max.is_finite()) {
        return Err(ImpairmentError::Grid(format!("bound {max}")));
    }
    if max == 0.0 {
        return Ok(vec![0.0]);
    }
    if step.is_nan() || step <= 0.0 {
        return Err(ImpairmentError::Grid(format!("step {step}")));
    }
    let n = (max / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * step).collect())
}

/// Angle deviations `(δx, δy)` over `[−dev, dev]²` with `(δx, δy)` and
/// `(−δx, −δy)` represented once. Reflecting both Q axes maps one distortion
/// onto the other up to a relabeling, so their GMIs nearly coincide (exactly
/// when the relabeling is a fixed bit flip).
fn half_angle_plane(dev: &[f64]) -> Vec<(f64, f64)> {
    let signed: Vec<f64> = dev.iter().rev().map(|d| -d).filter(|d| *d != 0.0).chain(dev.iter().copied()).collect();
    let mut out = Vec::new();
    for &dx in dev {
        for &dy in &signed {
            if dx == 0.0 && dy < 0.0 {
                continue;
            }
            out.push((dx, dy));
        }
    }
    out
}

/// Minimum GMI over MZM settings `θ ∈ 90° ± [0, theta_dev_max]` and
/// `α ∈ [0, gain_db_max]` dB, independently per polarization.
///
/// Cells of the half angle plane are screened with common random numbers; the
/// `refine_top` lowest and their mirror images `(−δx, −δy)` are re-evaluated
/// with `final_samples` and the smallest refined value is returned. Ties
/// resolve to the lexicographically smallest `(θx, θy, αx, αy)`.
pub fn worst_case_gmi(
    c: &Constellation4D,
    snr_db: f64,
    theta_dev_max: f64,
    gain_db_max: f64,
    grid_step: (f64, f64),
    budget: &SearchBudget,
) -> Result<WorstCase, ImpairmentError> {
    let dev = axis(theta_dev_max, grid_step.0)?;
    let gains = axis(gain_db_max, grid_step.1)?;
    let mut cells = Vec::new();
    for (dx, dy) in half_angle_plane(&dev) {
        for &ax in &gains {
            for &ay in &gains {
                cells.push(MzmImbalance { theta_x: 90.0 + dx, theta_y: 90.0 + dy, alpha_x_db: ax, alpha_y_db: ay });
            }
        }
    }
    cells.sort_by(|a, b| a.key().partial_cmp(&b.key()).unwrap());
    let final_bank = NoiseBank::new(budget.final_samples, budget.seed)?;
    let nominal = impaired_rates(&final_bank, c, &MzmImbalance::NOMINAL, snr_db, budget.noise_reference)?.gmi().0;

    let mut refine: Vec<MzmImbalance> = if cells.len() <= budget.refine_top {
        cells.clone()
    } else {
        let screen = NoiseBank::screening(budget.screen_samples, budget.seed.wrapping_add(1), MIN_SCREEN_SAMPLES)?;
        let scores: Vec<f64> = cells
            .par_iter()
            .map(|imb| impaired_rates(&screen, c, imb, snr_db, budget.noise_reference).map(|a| a.gmi().0))
            .collect::<Result<_, _>>()?;
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        order[..budget.refine_top].iter().map(|&i| cells[i]).collect()
    };
    let mirrors: Vec<MzmImbalance> =
        refine.iter().map(|m| MzmImbalance { theta_x: 180.0 - m.theta_x, theta_y: 180.0 - m.theta_y, ..*m }).collect();
    refine.extend(mirrors);
    refine.sort_by(|a, b| a.key().partial_cmp(&b.key()).unwrap());
    refine.dedup();
    let mut best: Option<(f64, f64, MzmImbalance)> = None;
    for imb in refine {
        let (g, se) = impaired_rates(&final_bank, c, &imb, snr_db, budget.noise_reference)?.gmi();
        if best.is_none_or(|(bg, _, _)| g < bg) {
            best = Some((g, se, imb));
        }
    }
    let (min_gmi, std_err, argmin) = best.expect("grid has at least one cell");
    Ok(WorstCase { min_gmi: min_gmi.min(nominal), std_err, argmin, nominal_gmi: nominal, cells: cells.len() })
}

/// One cell of the symmetric imbalance heatmap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ImbalanceCell {
    pub theta_dev: f64,
    pub gain_db: f64,
    pub gmi: f64,
    pub std_err: f64,
}

/// GMI over a `(θ deviation, gain)` grid applied equally to both
/// polarizations, in row-major order of `theta_devs` then `gains`.
pub fn imbalance_grid(
    c: &Constellation4D,
    snr_db: f64,
    theta_devs: &[f64],
    gains: &[f64],
    n_samples: usize,
    seed: u64,
    reference: NoiseReference,
) -> Result<Vec<ImbalanceCell>, ImpairmentError> {
    let bank = NoiseBank::new(n_samples, seed)?;
    let pairs: Vec<(f64, f64)> = theta_devs.iter().flat_map(|&t| gains.iter().map(move |&g| (t, g))).collect();
    pairs
        .par_iter()
        .map(|&(t, g)| {
            let (gmi, std_err) = impaired_rates(&bank, c, &MzmImbalance::symmetric(t, g), snr_db, reference)?.gmi();
            Ok(ImbalanceCell { theta_dev: t, gain_db: g, gmi, std_err })
        })
        .collect()
}

/// CSV with columns `theta_dev,gain_db,gmi` followed by one column per format.
pub fn imbalance_grid_csv(formats: &[(&str, &[ImbalanceCell])]) -> String {
    let mut s = String::from("theta_dev,gain_db");
    for (name, _) in formats {
        let _ = write!(s, ",gmi_{name}");
    }
    s.push('\n');
    if let Some((_, first)) = formats.first() {
        for (i, cell) in first.iter().enumerate() {
            let _ = write!(s, "{:.3},{:.3}", cell.theta_dev, cell.gain_db);
            for (_, cells) in formats {
                let _ = write!(s, ",{:.6}", cells[i].gmi);
            }
            s.push('\n');
        }
    }
    s
}

/// Root-raised-cosine taps at `sps` samples per symbol over `span` symbols
/// (`span·sps + 1` taps, centered), scaled to unit energy.
pub fn rrc_taps(sps: usize, rolloff: f64, span: usize) -> Vec<f64> {
    let n = span * sps;
    let half = (n / 2) as isize;
    let b = rolloff;
    let mut h: Vec<f64> = (-half..=half)
        .map(|k| {
            let t = k as f64 / sps as f64;
            if k == 0 {
                1.0 - b + 4.0 * b / PI
            } else if b > 0.0 && ((4.0 * b * t).abs() - 1.0).abs() < 1e-12 {
                b / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin() + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
            } else {
                let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
                let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
                num / den
            }
        })
        .collect();
    let e: f64 = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut h {
        *v /= e;
    }
    h
}

/// Pulse-shaping settings and DAC vertical resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DacConfig {
    pub bits: u32,
    pub samples_per_symbol: usize,
    pub rolloff: f64,
    pub span_symbols: usize,
    /// Quantizer full scale as a fraction of each rail's peak; samples beyond
    /// it are clipped.
    pub full_scale: f64,
}

impl Default for DacConfig {
    fn default() -> Self {
        DacConfig { bits: 8, samples_per_symbol: 2, rolloff: 0.1, span_symbols: 64, full_scale: 1.0 }
    }
}

impl DacConfig {
    pub fn with_bits(mut self, bits: u32) -> Self {
        self.bits = bits;
        self
    }

    fn validate_shaping(&self) -> Result<(), ImpairmentError> {
        if self.samples_per_symbol < 2 {
            return Err(ImpairmentError::Dac(format!("samples_per_symbol {}", self.samples_per_symbol)));
        }
        if !(self.rolloff > 0.0 && self.rolloff < 1.0) {
            return Err(ImpairmentError::Dac(format!("rolloff {}", self.rolloff)));
        }
        if self.span_symbols == 0 || !self.span_symbols.is_multiple_of(2) {
            return Err(ImpairmentError::Dac(format!("span_symbols {} must be even", self.span_symbols)));
        }
        Ok(())
    }
}

/// Upsamples by `sps` and filters with the RRC taps. The convolution is
/// circular over the block and the taps are centered, so symbol `k` peaks at
/// sample `k·sps` with no group delay to compensate.
pub fn rrc_shape(symbols: &[Point4D], sps: usize, rolloff: f64, span: usize) -> SampledWaveform {
    let h = rrc_taps(sps, rolloff, span);
    let n = symbols.len() * sps;
    let c = (h.len() / 2) as isize;
    let mut w = SampledWaveform::zeros(n, sps as f64);
    if n == 0 {
        return w;
    }
    for (m, s) in symbols.iter().enumerate() {
        let base = (m * sps) as isize - c;
        for (k, &hk) in h.iter().enumerate() {
            let i = (base + k as isize).rem_euclid(n as isize) as usize;
            w.x[i] += s.x * hk;
            w.y[i] += s.y * hk;
        }
    }
    w
}

/// Matched RRC filter sampled at the symbol instants of [`rrc_shape`].
pub fn rrc_matched(w: &SampledWaveform, sps: usize, rolloff: f64, span: usize) -> Vec<Point4D> {
    let h = rrc_taps(sps, rolloff, span);
    let n = w.len();
    let c = (h.len() / 2) as isize;
    (0..n / sps)
        .map(|m| {
            let base = (m * sps) as isize - c;
            let mut x = C64::new(0.0, 0.0);
            let mut y = C64::new(0.0, 0.0);
            for (k, &hk) in h.iter().enumerate() {
                let i = (base + k as isize).rem_euclid(n as isize) as usize;
                x += w.x[i] * hk;
                y += w.y[i] * hk;
            }
            Point4D::new(x, y)
        })
        .collect()
}

fn quantize_rail(values: impl Iterator<Item = f64>, bits: u32, full_scale: f64) -> Option<impl Fn(f64) -> f64> {
    let full = full_scale * values.fold(0.0f64, |m, v| m.max(v.abs()));
    if full == 0.0 {
        return None;
    }
    let top = ((1u64 << bits) - 1) as f64;
    let step = 2.0 * full / top;
    Some(move |v: f64| {
        let idx = ((v + full) / step).round().clamp(0.0, top);
        -full + idx * step
    })
}

/// Rounds each real rail (Ix, Qx, Iy, Qy) to the nearest of `2^bits` uniform
/// levels spanning `[−f·max|rail|, +f·max|rail|]` of that rail, with
/// `f = cfg.full_scale`.
pub fn dac_quantize(w: &SampledWaveform, cfg: &DacConfig) -> Result<SampledWaveform, ImpairmentError> {
    if !(1..=24).contains(&cfg.bits) {
        return Err(ImpairmentError::Dac(format!("bits {}", cfg.bits)));
    }
    if !(cfg.full_scale > 0.0 && cfg.full_scale <= 1.0) {
        return Err(ImpairmentError::Dac(format!("full_scale {}", cfg.full_scale)));
    }
    let qxr =
        quantize_rail(w.x.iter().map(|v| v.re), cfg.bits, cfg.full_scale).ok_or(ImpairmentError::ZeroRail("I_x"))?;
    let qxi =
        quantize_rail(w.x.iter().map(|v| v.im), cfg.bits, cfg.full_scale).ok_or(ImpairmentError::ZeroRail("Q_x"))?;
    let qyr =
        quantize_rail(w.y.iter().map(|v| v.re), cfg.bits, cfg.full_scale).ok_or(ImpairmentError::ZeroRail("I_y"))?;
    let qyi =
        quantize_rail(w.y.iter().map(|v| v.im), cfg.bits, cfg.full_scale).ok_or(ImpairmentError::ZeroRail("Q_y"))?;
    let mut out = w.clone();
    for v in &mut out.x {
        *v = C64::new(qxr(v.re), qxi(v.im));
    }
    for v in &mut out.y {
        *v = C64::new(qyr(v.re), qyi(v.im));
    }
    Ok(out)
}

/// Back-to-back DAC channel: the symbol stream drawn by a [`NoiseBank`] is
/// shaped, optionally quantized and matched-filtered; the resulting
/// symbol-rate samples plus white Gaussian noise are detected against the
/// ideal constellation. Since the noise is memoryless, adding it after the
/// matched filter is equivalent to adding it on the line.
#[derive(Clone, Debug)]
pub struct DacChannel {
    bank: NoiseBank,
    received: Vec<Point4D>,
    ideal: Constellation4D,
}

impl DacChannel {
    /// `cfg = None` skips quantization (ideal DAC).
    pub fn new(
        c: &Constellation4D,
        cfg: Option<&DacConfig>,
        n_samples: usize,
        seed: u64,
    ) -> Result<Self, ImpairmentError> {
        let shaping = cfg.copied().unwrap_or_default();
        shaping.validate_shaping()?;
        let bank = NoiseBank::new(n_samples, seed)?;
        let symbols: Vec<Point4D> = bank.labels().iter().map(|&l| c.points()[l as usize]).collect();
        let sps = shaping.samples_per_symbol;
        let mut w = rrc_shape(&symbols, sps, shaping.rolloff, shaping.span_symbols);
        if let Some(q) = cfg {
            w = dac_quantize(&w, q)?;
        }
        let received = rrc_matched(&w, sps, shaping.rolloff, shaping.span_symbols);
        Ok(DacChannel { bank, received, ideal: c.clone() })
    }

    /// Noise-free symbol-rate samples after the matched filter.
    pub fn received(&self) -> &[Point4D] {
        &self.received
    }

    pub fn gmi(&self, snr_db: f64) -> Result<(f64, f64), InfoError> {
        let sigma2 = noise_variance(REFERENCE_ENERGY, snr_db);
        let demapper = crate::infometrics::Demapper::new(&self.ideal);
        let sigma = sigma2.sqrt();
        let z = self.bank.noise();
        let mut acc = RateAccumulator::default();
        for ((&l, r), n) in self.bank.labels().iter().zip(&self.received).zip(z) {
            let x = r.coords();
            let y = [x[0] + sigma * n[0], x[1] + sigma * n[1], x[2] + sigma * n[2], x[3] + sigma * n[3]];
            acc.push(&demapper.sample_metrics(&y, l as usize, sigma2));
        }
        acc.check()?;
        Ok(acc.gmi())
    }

    pub fn required_snr(&self, target_gmi: f64, tol_db: f64) -> Result<RequiredSnr, InfoError> {
        required_snr_with(|s| self.gmi(s), target_gmi, tol_db)
    }
}

/// Required SNR at `target_gmi` for each DAC resolution, and for an ideal DAC.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DacSweep {
    pub ideal_snr_db: f64,
    /// `(bits, required SNR, penalty over ideal)`.
    pub rows: Vec<(u32, f64, f64)>,
}

pub fn dac_sweep(
    c: &Constellation4D,
    bits: &[u32],
    base: &DacConfig,
    target_gmi: f64,
    tol_db: f64,
    n_samples: usize,
    seed: u64,
) -> Result<DacSweep, ImpairmentError> {
    let ideal = DacChannel::new(c, None, n_samples, seed)?.required_snr(target_gmi, tol_db)?.snr_db;
    let rows = bits
        .iter()
        .map(|&b| {
            let ch = DacChannel::new(c, Some(&base.with_bits(b)), n_samples, seed)?;
            let s = ch.required_snr(target_gmi, tol_db)?.snr_db;
            Ok((b, s, s - ideal))
        })
        .collect::<Result<_, ImpairmentError>>()?;
    Ok(DacSweep { ideal_snr_db: ideal, rows })
}

/// Mean squared distance between received and ideal points, relative to the
/// mean ideal energy.
pub fn evm(received: &[Point4D], ideal: &[Point4D]) -> f64 {
    let err: f64 = received.iter().zip(ideal).map(|(a, b)| a.sq_dist(b)).sum();
    let e: f64 = ideal.iter().map(Point4D::energy).sum();
    (err / e).sqrt()
}
