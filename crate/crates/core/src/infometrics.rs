//! Monte Carlo MI / GMI estimation over the memoryless Gaussian channel.
//!
//! SNR is the 4D symbol energy over the total noise power: with mean 4D
//! energy `E` the noise variance per real dimension is `E / (4 · snr)`. For the
//! normalized formats (`E = 2`) this equals the per-polarization Es/N0.
//!
//! Bit metrics are exact log-sum-exp sums over all 64 points (no max-log).
//! Samples are generated in fixed-size batches whose RNG streams are derived
//! from `(seed, batch index)`, and batch results are reduced in index order,
//! so results do not depend on thread scheduling.

use crate::constellation::{Constellation4D, Point4D};
use crate::{db_to_lin, BITS_PER_SYMBOL, CONSTELLATION_SIZE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Smallest sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 10_000;

/// Samples per RNG stream.
pub const BATCH_SIZE: usize = 8192;

/// Mean 4D energy of a normalized constellation.
pub const REFERENCE_ENERGY: f64 = 2.0;

/// Bisection bracket used by [`required_snr`].
pub const SNR_BRACKET_DB: (f64, f64) = (-10.0, 30.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("too few Monte Carlo samples: {0}")]
    TooFewSamples(usize),
    #[error("non-finite bit metric encountered")]
    NonFiniteMetric,
    #[error("target rate {0} must lie strictly between 0 and 6 bits")]
    InvalidTarget(f64),
    #[error("GMI {reached:.4} at {snr_db} dB stays below the target {target}")]
    Unreachable { target: f64, snr_db: f64, reached: f64 },
    #[error("GMI is not monotone in SNR: {lo_gmi:.4} at {lo_db} dB vs {hi_gmi:.4} at {hi_db} dB")]
    NotMonotone { lo_db: f64, lo_gmi: f64, hi_db: f64, hi_gmi: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Noise variance per real dimension for a 4D signal of mean energy `energy`.
pub fn noise_variance(energy: f64, snr_db: f64) -> f64 {
    energy / (4.0 * db_to_lin(snr_db))
}

/// Additive white Gaussian noise channel parametrized by SNR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AwgnChannel {
    pub snr_db: f64,
    /// Signal energy the SNR refers to.
    pub reference_energy: f64,
}

impl AwgnChannel {
    pub fn new(snr_db: f64) -> Self {
        AwgnChannel { snr_db, reference_energy: REFERENCE_ENERGY }
    }

    pub fn with_reference_energy(mut self, energy: f64) -> Self {
        self.reference_energy = energy;
        self
    }

    pub fn sigma2(&self) -> f64 {
        noise_variance(self.reference_energy, self.snr_db)
    }
}

/// One point of a GMI/MI-versus-SNR curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub gmi: f64,
    pub mi: Option<f64>,
    pub n_samples: usize,
    /// Standard error of `gmi` (of `mi` for [`mi_estimate`]).
    pub std_err: f64,
    pub seed: u64,
}

/// Exact bit-wise and symbol-wise metric computer for a fixed constellation.
#[derive(Clone, Debug)]
pub struct Demapper {
    coords: Vec<[f64; 4]>,
}

/// Per-sample log-likelihood terms (natural log).
#[derive(Clone, Copy, Debug)]
pub struct SampleMetrics {
    /// `ln Σ_j p(y|x_j) / p(y|x_tx)`.
    pub symbol: f64,
    /// `ln Σ_j p(y|x_j) / Σ_{j: b_k(j) = b_k(tx)} p(y|x_j)` for each bit.
    pub bits: [f64; BITS_PER_SYMBOL],
}

impl Demapper {
    pub fn new(c: &Constellation4D) -> Self {
        Demapper { coords: c.points().iter().map(Point4D::coords).collect() }
    }

    fn log_metrics(&self, y: &[f64; 4], inv_2s2: f64, m: &mut [f64; CONSTELLATION_SIZE]) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for (mj, x) in m.iter_mut().zip(&self.coords) {
            let d0 = y[0] - x[0];
            let d1 = y[1] - x[1];
            let d2 = y[2] - x[2];
            let d3 = y[3] - x[3];
            *mj = -(d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3) * inv_2s2;
            if *mj > max {
                max = *mj;
            }
        }
        max
    }

    /// Log-sum-exp over the labels selected by `keep`, robust to underflow.
    fn lse_subset(m: &[f64; CONSTELLATION_SIZE], keep: impl Fn(usize) -> bool) -> f64 {
        let max = (0..CONSTELLATION_SIZE).filter(|&j| keep(j)).map(|j| m[j]).fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = (0..CONSTELLATION_SIZE).filter(|&j| keep(j)).map(|j| (m[j] - max).exp()).sum();
        max + s.ln()
    }

    /// Metrics of one received sample `y` given the transmitted label.
    pub fn sample_metrics(&self, y: &[f64; 4], tx: usize, sigma2: f64) -> SampleMetrics {
        let mut m = [0.0; CONSTELLATION_SIZE];
        let max = self.log_metrics(y, 0.5 / sigma2, &mut m);
        let mut e = [0.0; CONSTELLATION_SIZE];
        let mut all = 0.0;
        let mut sub = [[0.0f64; 2]; BITS_PER_SYMBOL];
        for j in 0..CONSTELLATION_SIZE {
            let v = (m[j] - max).exp();
            e[j] = v;
            all += v;
            for (k, s) in sub.iter_mut().enumerate() {
                s[(j >> (BITS_PER_SYMBOL - 1 - k)) & 1] += v;
            }
        }
        // `all` >= 1 because the maximizing term contributes exp(0).
        let ln_all = max + all.ln();
        let mut bits = [0.0; BITS_PER_SYMBOL];
        for (k, out) in bits.iter_mut().enumerate() {
            let shift = BITS_PER_SYMBOL - 1 - k;
            let b = (tx >> shift) & 1;
            let s = sub[k][b];
            let ln_sub = if s > 1e-250 { max + s.ln() } else { Self::lse_subset(&m, |j| (j >> shift) & 1 == b) };
            *out = ln_all - ln_sub;
        }
        let symbol = if e[tx] > 1e-250 { ln_all - (max + e[tx].ln()) } else { ln_all - m[tx] };
        SampleMetrics { symbol, bits }
    }

    /// Label of the point closest to `y` (minimum 4D Euclidean distance).
    pub fn nearest(&self, y: &[f64; 4]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (j, x) in self.coords.iter().enumerate() {
            let d = (y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2) + (y[2] - x[2]).powi(2) + (y[3] - x[3]).powi(2);
            if d < best.0 {
                best = (d, j);
            }
        }
        best.1
    }

    /// Bit LLRs `ln p(b_k = 0 | y) / p(b_k = 1 | y)`, b1 first.
    pub fn llrs(&self, y: &[f64; 4], sigma2: f64) -> [f64; BITS_PER_SYMBOL] {
        let mut m = [0.0; CONSTELLATION_SIZE];
        self.log_metrics(y, 0.5 / sigma2, &mut m);
        let mut out = [0.0; BITS_PER_SYMBOL];
        for (k, o) in out.iter_mut().enumerate() {
            let shift = BITS_PER_SYMBOL - 1 - k;
            *o = Self::lse_subset(&m, |j| (j >> shift) & 1 == 0) - Self::lse_subset(&m, |j| (j >> shift) & 1 == 1);
        }
        out
    }
}

/// Running sums of per-sample rate terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RateAccumulator {
    pub n: usize,
    gmi_sum: f64,
    gmi_sq: f64,
    mi_sum: f64,
    mi_sq: f64,
    non_finite: bool,
}

impl RateAccumulator {
    pub fn push(&mut self, s: &SampleMetrics) {
        let ln2 = std::f64::consts::LN_2;
        let g = BITS_PER_SYMBOL as f64 - s.bits.iter().sum::<f64>() / ln2;
        let m = BITS_PER_SYMBOL as f64 - s.symbol / ln2;
        if !(g.is_finite() && m.is_finite()) {
            self.non_finite = true;
        }
        self.n += 1;
        self.gmi_sum += g;
        self.gmi_sq += g * g;
        self.mi_sum += m;
        self.mi_sq += m * m;
    }

    pub fn merge(&mut self, o: &RateAccumulator) {
        self.n += o.n;
        self.gmi_sum += o.gmi_sum;
        self.gmi_sq += o.gmi_sq;
        self.mi_sum += o.mi_sum;
        self.mi_sq += o.mi_sq;
        self.non_finite |= o.non_finite;
    }

    fn mean_se(sum: f64, sq: f64, n: usize) -> (f64, f64) {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sq / nf - mean * mean) * nf / (nf - 1.0).max(1.0)).max(0.0);
        (mean, (var / nf).sqrt())
    }

    /// `(gmi, std_err)`.
    pub fn gmi(&self) -> (f64, f64) {
        Self::mean_se(self.gmi_sum, self.gmi_sq, self.n)
    }

    /// `(mi, std_err)`.
    pub fn mi(&self) -> (f64, f64) {
        Self::mean_se(self.mi_sum, self.mi_sq, self.n)
    }

    pub fn check(&self) -> Result<(), InfoError> {
        if self.non_finite {
            Err(InfoError::NonFiniteMetric)
        } else {
            Ok(())
        }
    }
}

/// RNG for batch `index` of a run seeded with `seed`.
pub fn batch_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform labels and unit-variance Gaussian noise, drawn once and reusable
/// across channel settings (common random numbers).
#[derive(Clone, Debug)]
pub struct NoiseBank {
    labels: Vec<u8>,
    noise: Vec<[f64; 4]>,
    pub seed: u64,
}

impl NoiseBank {
    pub fn new(n_samples: usize, seed: u64) -> Result<Self, InfoError> {
        Self::screening(n_samples, seed, MIN_SAMPLES)
    }

    /// Like [`NoiseBank::new`] with a caller-chosen lower limit, for coarse
    /// screening passes whose results are re-checked with a full-size bank.
    pub fn screening(n_samples: usize, seed: u64, min_samples: usize) -> Result<Self, InfoError> {
        if n_samples < min_samples.max(1) {
            return Err(InfoError::TooFewSamples(n_samples));
        }
        let n_batches = n_samples.div_ceil(BATCH_SIZE);
        let parts: Vec<(Vec<u8>, Vec<[f64; 4]>)> = (0..n_batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = batch_rng(seed, b as u64);
                let len = BATCH_SIZE.min(n_samples - b * BATCH_SIZE);
                let mut labels = Vec::with_capacity(len);
                let mut noise = Vec::with_capacity(len);
                for _ in 0..len {
                    labels.push(rng.random_range(0..CONSTELLATION_SIZE) as u8);
                    let mut z = [0.0; 4];
                    for v in &mut z {
                        *v = rng.sample(StandardNormal);
                    }
                    noise.push(z);
                }
                (labels, noise)
            })
            .collect();
        let mut labels = Vec::with_capacity(n_samples);
        let mut noise = Vec::with_capacity(n_samples);
        for (l, z) in parts {
            labels.extend(l);
            noise.extend(z);
        }
        Ok(NoiseBank { labels, noise, seed })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Unit-variance noise per real dimension, one row per sample.
    pub fn noise(&self) -> &[[f64; 4]] {
        &self.noise
    }

    /// Rates when label `l` is sent as `tx[l]` and detected with exact
    /// metrics for `rx`. Using different `tx` and `rx` models a transmitter
    /// distortion known to the receiver only through `rx`.
    pub fn rates(&self, tx: &[[f64; 4]], rx: &Constellation4D, sigma2: f64) -> Result<RateAccumulator, InfoError> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(InfoError::Invalid(format!("noise variance {sigma2}")));
        }
        if tx.len() != CONSTELLATION_SIZE {
            return Err(InfoError::Invalid(format!("{} transmit points", tx.len())));
        }
        let demapper = Demapper::new(rx);
        let sigma = sigma2.sqrt();
        let parts: Vec<RateAccumulator> = self
            .labels
            .par_chunks(BATCH_SIZE)
            .zip(self.noise.par_chunks(BATCH_SIZE))
            .map(|(ls, zs)| {
                let mut acc = RateAccumulator::default();
                for (&l, z) in ls.iter().zip(zs) {
                    let x = &tx[l as usize];
                    let y = [x[0] + sigma * z[0], x[1] + sigma * z[1], x[2] + sigma * z[2], x[3] + sigma * z[3]];
                    acc.push(&demapper.sample_metrics(&y, l as usize, sigma2));
                }
                acc
            })
            .collect();
        let mut total = RateAccumulator::default();
        for p in &parts {
            total.merge(p);
        }
        total.check()?;
        Ok(total)
    }

    /// GMI/MI of `c` at `snr_db` (noise referenced to [`REFERENCE_ENERGY`]).
    pub fn snr_point(&self, c: &Constellation4D, snr_db: f64) -> Result<SnrPoint, InfoError> {
        let tx: Vec<[f64; 4]> = c.points().iter().map(Point4D::coords).collect();
        let acc = self.rates(&tx, c, AwgnChannel::new(snr_db).sigma2())?;
        let mut p = point_from(&acc, snr_db, self.seed, true);
        p.std_err = acc.gmi().1;
        Ok(p)
    }
}

/// Monte Carlo rate estimate; see [`NoiseBank::rates`].
pub fn estimate_rates(
    tx: &Constellation4D,
    rx: &Constellation4D,
    sigma2: f64,
    n_samples: usize,
    seed: u64,
) -> Result<RateAccumulator, InfoError> {
    let bank = NoiseBank::new(n_samples, seed)?;
    let coords: Vec<[f64; 4]> = tx.points().iter().map(Point4D::coords).collect();
    bank.rates(&coords, rx, sigma2)
}

/// Rates measured on given `(label, received point)` pairs with a Gaussian
/// metric of variance `sigma2` per real dimension.
pub fn rates_from_samples<'a>(
    rx: &Constellation4D,
    sigma2: f64,
    samples: impl IntoIterator<Item = (usize, &'a Point4D)>,
) -> Result<RateAccumulator, InfoError> {
    let demapper = Demapper::new(rx);
    let mut acc = RateAccumulator::default();
    for (l, p) in samples {
        acc.push(&demapper.sample_metrics(&p.coords(), l, sigma2));
    }
    acc.check()?;
    Ok(acc)
}

fn point_from(acc: &RateAccumulator, snr_db: f64, seed: u64, with_mi: bool) -> SnrPoint {
    let (gmi, gse) = acc.gmi();
    let (mi, mse) = acc.mi();
    SnrPoint {
        snr_db,
        gmi,
        mi: with_mi.then_some(mi),
        n_samples: acc.n,
        std_err: if with_mi { mse } else { gse },
        seed,
    }
}

/// Bit-wise (BICM) achievable rate of `c` at `snr_db`.
pub fn gmi_estimate(c: &Constellation4D, snr_db: f64, n_samples: usize, seed: u64) -> Result<SnrPoint, InfoError> {
    NoiseBank::new(n_samples, seed)?.snr_point(c, snr_db)
}

/// Symbol-wise mutual information; `gmi` is filled from the same samples.
pub fn mi_estimate(c: &Constellation4D, snr_db: f64, n_samples: usize, seed: u64) -> Result<SnrPoint, InfoError> {
    let acc = estimate_rates(c, c, AwgnChannel::new(snr_db).sigma2(), n_samples, seed)?;
    Ok(point_from(&acc, snr_db, seed, true))
}

/// GMI at every SNR of `grid`, all evaluated with the same noise draws.
pub fn gmi_sweep(c: &Constellation4D, grid: &[f64], n_samples: usize, seed: u64) -> Result<Vec<SnrPoint>, InfoError> {
    let bank = NoiseBank::new(n_samples, seed)?;
    grid.iter().map(|&s| bank.snr_point(c, s)).collect()
}

/// Outcome of [`required_snr`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RequiredSnr {
    pub snr_db: f64,
    /// The target is met already at the lower end of the bracket.
    pub at_lower_bound: bool,
    pub evaluations: usize,
}

/// Smallest SNR at which `rate(snr)` reaches `target`, by bisection over
/// [`SNR_BRACKET_DB`] until the bracket is narrower than `tol_db`.
///
/// `rate` must be (statistically) nondecreasing; a decrease larger than three
/// standard errors between the bracket ends is reported as an error.
pub fn required_snr_with(
    mut rate: impl FnMut(f64) -> Result<(f64, f64), InfoError>,
    target: f64,
    tol_db: f64,
) -> Result<RequiredSnr, InfoError> {
    if !(target > 0.0 && target < BITS_PER_SYMBOL as f64) {
        return Err(InfoError::InvalidTarget(target));
    }
    if tol_db.is_nan() || tol_db <= 0.0 {
        return Err(InfoError::Invalid(format!("tolerance {tol_db}")));
    }
    let (mut lo, mut hi) = SNR_BRACKET_DB;
    let (g_lo, se_lo) = rate(lo)?;
    let mut evaluations = 1;
    if g_lo >= target {
        return Ok(RequiredSnr { snr_db: lo, at_lower_bound: true, evaluations });
    }
    let (g_hi, se_hi) = rate(hi)?;
    evaluations += 1;
    if g_hi < target {
        return Err(InfoError::Unreachable { target, snr_db: hi, reached: g_hi });
    }
    let (mut lo_g, mut lo_se, mut hi_g, mut hi_se) = (g_lo, se_lo, g_hi, se_hi);
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        let (g, se) = rate(mid)?;
        evaluations += 1;
        if g < lo_g - 3.0 * (se + lo_se) || g > hi_g + 3.0 * (se + hi_se) {
            let (a, ag, b, bg) = if g < lo_g { (lo, lo_g, mid, g) } else { (mid, g, hi, hi_g) };
            return Err(InfoError::NotMonotone { lo_db: a, lo_gmi: ag, hi_db: b, hi_gmi: bg });
        }
        if g < target {
            lo = mid;
            lo_g = g;
            lo_se = se;
        } else {
            hi = mid;
            hi_g = g;
            hi_se = se;
        }
    }
    Ok(RequiredSnr { snr_db: 0.5 * (lo + hi), at_lower_bound: false, evaluations })
}

/// SNR needed for the GMI of `c` to reach `target_gmi` (common random numbers
/// across the bisection).
pub fn required_snr(
    c: &Constellation4D,
    target_gmi: f64,
    tol_db: f64,
    n_samples: usize,
    seed: u64,
) -> Result<RequiredSnr, InfoError> {
    let bank = NoiseBank::new(n_samples, seed)?;
    required_snr_with(|snr| bank.snr_point(c, snr).map(|p| (p.gmi, p.std_err)), target_gmi, tol_db)
}

/// Bit error ratio of minimum-distance hard decisions on `c` at `snr_db`.
pub fn hard_ber(bank: &NoiseBank, c: &Constellation4D, snr_db: f64) -> f64 {
    let d = Demapper::new(c);
    let sigma = AwgnChannel::new(snr_db).sigma2().sqrt();
    let coords: Vec<[f64; 4]> = c.points().iter().map(Point4D::coords).collect();
    let errors: u64 = bank
        .labels
        .par_chunks(BATCH_SIZE)
        .zip(bank.noise.par_chunks(BATCH_SIZE))
        .map(|(ls, zs)| {
            ls.iter()
                .zip(zs)
                .map(|(&l, z)| {
                    let x = &coords[l as usize];
                    let y = [x[0] + sigma * z[0], x[1] + sigma * z[1], x[2] + sigma * z[2], x[3] + sigma * z[3]];
                    u64::from((d.nearest(&y) ^ l as usize).count_ones())
                })
                .sum::<u64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    errors as f64 / (BITS_PER_SYMBOL * bank.len()) as f64
}

/// SNR at which the hard-decision BER of `c` falls to `target_ber`
/// (bisection over [`SNR_BRACKET_DB`] with common random numbers).
pub fn required_snr_for_ber(
    c: &Constellation4D,
    target_ber: f64,
    tol_db: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64, InfoError> {
    if !(target_ber > 0.0 && target_ber < 0.5) {
        return Err(InfoError::Invalid(format!("target BER {target_ber}")));
    }
    let bank = NoiseBank::new(n_samples, seed)?;
    let (mut lo, mut hi) = SNR_BRACKET_DB;
    if hard_ber(&bank, c, hi) > target_ber {
        return Err(InfoError::Invalid(format!("BER {target_ber} not reached at {hi} dB")));
    }
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        if hard_ber(&bank, c, mid) > target_ber {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_rs64, FormatKind};
    use std::f64::consts::FRAC_PI_8;

    #[test]
    fn saturates_at_high_snr() {
        let c = build_rs64(0.5, FRAC_PI_8).unwrap();
        let p = gmi_estimate(&c, 30.0, 20_000, 1).unwrap();
        assert!((p.gmi - 6.0).abs() < 0.01, "{p:?}");
        assert!((p.mi.unwrap() - 6.0).abs() < 0.01);
    }

    #[test]
    fn vanishes_at_low_snr() {
        let c = build_rs64(0.5, FRAC_PI_8).unwrap();
        let p = gmi_estimate(&c, -20.0, 20_000, 1).unwrap();
        assert!(p.gmi.abs() < 0.05, "{p:?}");
    }

    #[test]
    fn metrics_finite_at_extreme_snr() {
        // Far tails force the subset sums below the underflow guard.
        let c = FormatKind::Pdm8QamStar.build_default();
        let d = Demapper::new(&c);
        let y = [40.0, -40.0, 40.0, 40.0];
        let s = d.sample_metrics(&y, 0, 1e-6);
        assert!(s.symbol.is_finite());
        assert!(s.bits.iter().all(|b| b.is_finite() && *b >= -1e-9));
        assert!(d.llrs(&y, 1e-6).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn llr_signs_recover_bits_at_30db() {
        let c = build_rs64(0.5, FRAC_PI_8).unwrap();
        let d = Demapper::new(&c);
        let sigma2 = AwgnChannel::new(30.0).sigma2();
        let mut rng = batch_rng(3, 0);
        let mut errors = 0;
        let n = 50_000;
        for _ in 0..n {
            let l = rng.random_range(0..64usize);
            let mut y = c.points()[l].coords();
            for v in &mut y {
                let z: f64 = rng.sample(StandardNormal);
                *v += sigma2.sqrt() * z;
            }
            let llr = d.llrs(&y, sigma2);
            for (k, v) in llr.iter().enumerate() {
                let bit = (l >> (5 - k)) & 1;
                if (*v < 0.0) as usize != bit {
                    errors += 1;
                }
            }
        }
        assert!((errors as f64) / (6.0 * n as f64) < 1e-5);
    }

    #[test]
    fn seed_determinism() {
        let c = FormatKind::Prs64.build_default();
        let a = gmi_estimate(&c, 8.0, 20_000, 42).unwrap();
        let b = gmi_estimate(&c, 8.0, 20_000, 42).unwrap();
        assert_eq!(a.gmi.to_bits(), b.gmi.to_bits());
        let other = gmi_estimate(&c, 8.0, 20_000, 43).unwrap();
        assert_ne!(a.gmi.to_bits(), other.gmi.to_bits());
    }

    #[test]
    fn rejects_small_sample_counts() {
        let c = FormatKind::Rs64.build_default();
        assert_eq!(gmi_estimate(&c, 8.0, 100, 0), Err(InfoError::TooFewSamples(100)));
    }

    #[test]
    fn required_snr_edge_cases() {
        let c = FormatKind::Rs64.build_default();
        assert!(matches!(required_snr(&c, 6.0, 0.1, 20_000, 0), Err(InfoError::InvalidTarget(_))));
        let r = required_snr(&c, 1e-9, 0.1, 20_000, 0).unwrap();
        assert!(r.at_lower_bound);
        assert_eq!(r.snr_db, SNR_BRACKET_DB.0);
        let floor = required_snr_with(|_| Ok((3.0, 0.0)), 4.8, 0.1);
        assert!(matches!(floor, Err(InfoError::Unreachable { .. })));
    }

    #[test]
    fn bisection_on_known_curve() {
        let r = required_snr_with(|s| Ok(((s + 10.0) / 10.0, 0.0)), 2.5, 1e-3).unwrap();
        assert!((r.snr_db - 15.0).abs() < 1e-3);
        let dip = |s: f64| {
            if s < -5.0 {
                1.0
            } else if s < 20.0 {
                0.0
            } else {
                5.0
            }
        };
        let bad = required_snr_with(|s| Ok((dip(s), 0.0)), 2.5, 1e-3);
        assert!(matches!(bad, Err(InfoError::NotMonotone { .. })));
    }
}
