//! Symmetric split-step Fourier solution of the Manakov equation
//!
//! ```text
//! ∂A/∂z = −(α/2)·A − j(β₂/2)·∂²A/∂t² + (PMD) + j·(8/9)γ·|A|²·A
//! ```
//!
//! Each span is cut into waveplates. A waveplate starts with a random SU(2)
//! rotation and carries a fixed DGD spread evenly over its length. Each of its
//! steps is `L(h/2)·N(h)·L(h/2)`, with consecutive half steps merged into one
//! frequency-domain pass. After each span an amplifier restores the span loss
//! exactly and adds white Gaussian ASE.

use crate::config::{DgdModel, LinkConfig};
use crate::fft::{omega_grid, FftPair};
use crate::FiberError;
use fourd_core::infometrics::batch_rng;
use fourd_core::{SampledWaveform, C64};
use rand::Rng;
use rand_distr::StandardNormal;

/// 2×2 Jones matrix, row-major.
pub type Jones = [[C64; 2]; 2];

const PMD_STREAM: u64 = 0x706d_6400;
const ASE_STREAM: u64 = 0x6173_6500;

pub fn identity() -> Jones {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    [[o, z], [z, o]]
}

pub fn mat_mul(a: &Jones, b: &Jones) -> Jones {
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

pub fn adjoint(a: &Jones) -> Jones {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Haar-distributed SU(2) element from a normalized Gaussian quaternion.
fn random_rotation(rng: &mut impl Rng) -> Jones {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [a, b, c, d] = q.map(|v| v / n);
    [[C64::new(a, b), C64::new(c, d)], [C64::new(-c, d), C64::new(a, -b)]]
}

/// One waveplate: rotation at its input followed by a distributed DGD.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Waveplate {
    pub rotation: Jones,
    pub dgd_ps: f64,
}

impl Waveplate {
    /// Linear (frequency-dependent) response at `omega` (rad/ps).
    pub fn jones(&self, omega: f64) -> Jones {
        let p = C64::from_polar(1.0, 0.5 * omega * self.dgd_ps);
        let r = &self.rotation;
        [[p * r[0][0], p * r[0][1]], [p.conj() * r[1][0], p.conj() * r[1][1]]]
    }
}

/// Realized polarization elements of a link, for the genie receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRecord {
    pub waveplates: Vec<Waveplate>,
    pub waveplates_per_span: usize,
    pub spans: usize,
    pub span_length_km: f64,
    pub beta2: f64,
}

impl ChannelRecord {
    /// Draws the waveplates of every span of `link` from `seed`.
    pub fn draw(link: &LinkConfig, seed: u64) -> Self {
        let mut rng = batch_rng(seed, PMD_STREAM);
        let rms = link.segment_dgd_rms();
        let n = link.waveplates_per_span * link.n_spans;
        let waveplates = (0..n)
            .map(|_| {
                let rotation = random_rotation(&mut rng);
                let dgd_ps = match link.dgd_model {
                    DgdModel::Fixed => rms,
                    DgdModel::Gaussian { rel_std } => {
                        let mean = rms / (1.0 + rel_std * rel_std).sqrt();
                        let z: f64 = rng.sample(StandardNormal);
                        mean * (1.0 + rel_std * z)
                    }
                };
                Waveplate { rotation, dgd_ps }
            })
            .collect();
        ChannelRecord {
            waveplates,
            waveplates_per_span: link.waveplates_per_span,
            spans: link.n_spans,
            span_length_km: link.span_length_km,
            beta2: link.beta2(),
        }
    }

    /// Record of the first `spans` spans.
    pub fn truncated(&self, spans: usize) -> Result<Self, FiberError> {
        if spans > self.spans {
            return Err(FiberError::MissingRecord { have: self.spans, want: spans });
        }
        let mut r = self.clone();
        r.waveplates.truncate(spans * self.waveplates_per_span);
        r.spans = spans;
        Ok(r)
    }

    pub fn length_km(&self) -> f64 {
        self.spans as f64 * self.span_length_km
    }

    /// Polarization response (all waveplates in propagation order).
    pub fn jones(&self, omega: f64) -> Jones {
        self.waveplates.iter().fold(identity(), |h, wp| mat_mul(&wp.jones(omega), &h))
    }

    /// Differential group delay (ps) at `omega`, from the eigenphases of
    /// `H(ω+δ/2)·H(ω−δ/2)†`.
    pub fn dgd_at(&self, omega: f64) -> f64 {
        let d = 1e-3;
        let m = mat_mul(&self.jones(omega + d / 2.0), &adjoint(&self.jones(omega - d / 2.0)));
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let tr = (m[0][0] + m[1][1]) / det.sqrt();
        let half = (0.5 * tr.re).clamp(-1.0, 1.0).acos();
        // Eigenphases of the SU(2) part are ±half.
        2.0 * half / d
    }
}

/// Runtime state of the propagation of one field.
struct Stepper {
    fft: FftPair,
    omega: Vec<f64>,
    /// Dispersion and loss over half a step.
    cd_half: Vec<C64>,
    steps: usize,
    gamma: f64,
    /// Nonlinear length per step giving the exact CW phase under loss.
    h_nl: f64,
    max_phase: f64,
}

impl Stepper {
    fn new(n: usize, fs_ghz: f64, link: &LinkConfig) -> Self {
        let omega = omega_grid(n, fs_ghz);
        let h = link.step_length_km();
        let a = link.alpha_per_km();
        let b2 = link.beta2();
        let loss = (-a * h / 4.0).exp();
        let cd_half = omega.iter().map(|w| C64::from_polar(loss, 0.5 * b2 * w * w * (h / 2.0))).collect();
        let h_nl = if a > 0.0 { 2.0 * (a * h / 2.0).sinh() / a } else { h };
        Stepper {
            fft: FftPair::new(n),
            omega,
            cd_half,
            steps: link.steps_per_waveplate,
            gamma: link.gamma_manakov(),
            h_nl,
            max_phase: link.max_nl_phase_per_step,
        }
    }

    /// DGD phasors of a half step of `wp`.
    fn dgd_half(&self, wp: &Waveplate) -> Vec<C64> {
        let k = wp.dgd_ps / (4.0 * self.steps as f64);
        self.omega.iter().map(|w| C64::from_polar(1.0, w * k)).collect()
    }

    /// `post · R · pre` in the frequency domain, where `pre`/`post` are half
    /// steps with the given DGD phasors and `R` an optional rotation.
    fn linear(&mut self, x: &mut [C64], y: &mut [C64], pre: Option<&[C64]>, rot: Option<&Jones>, post: Option<&[C64]>) {
        self.fft.forward(x);
        self.fft.forward(y);
        for k in 0..x.len() {
            let (mut a, mut b) = (x[k], y[k]);
            if let Some(d) = pre {
                a *= self.cd_half[k] * d[k];
                b *= self.cd_half[k] * d[k].conj();
            }
            if let Some(r) = rot {
                (a, b) = (r[0][0] * a + r[0][1] * b, r[1][0] * a + r[1][1] * b);
            }
            if let Some(d) = post {
                a *= self.cd_half[k] * d[k];
                b *= self.cd_half[k] * d[k].conj();
            }
            x[k] = a;
            y[k] = b;
        }
        self.fft.inverse(x);
        self.fft.inverse(y);
    }

    fn nonlinear(&self, x: &mut [C64], y: &mut [C64]) -> Result<(), FiberError> {
        let g = self.gamma * self.h_nl;
        let mut total = 0.0;
        for (a, b) in x.iter_mut().zip(y.iter_mut()) {
            let phi = g * (a.norm_sqr() + b.norm_sqr());
            total += phi;
            let r = C64::from_polar(1.0, phi);
            *a *= r;
            *b *= r;
        }
        let mean = total / x.len() as f64;
        if mean > self.max_phase {
            return Err(FiberError::StepAccuracy { phase: mean, limit: self.max_phase });
        }
        Ok(())
    }
}

/// Propagates `w` over `link`, calling `tap(spans_done, field)` at the input
/// (0) and after every amplifier. Returns the realized channel record.
pub fn propagate_tapped(
    w: &SampledWaveform,
    link: &LinkConfig,
    seed: u64,
    mut tap: impl FnMut(usize, &SampledWaveform) -> Result<(), FiberError>,
) -> Result<ChannelRecord, FiberError> {
    link.validate()?;
    let record = ChannelRecord::draw(link, seed);
    let n = w.len();
    let mut field = w.clone();
    tap(0, &field)?;
    if n == 0 {
        return Ok(record);
    }
    let mut st = Stepper::new(n, w.sample_rate, link);
    let gain = link.span_gain().sqrt();
    let ase_var = link.ase_psd() * w.sample_rate * 1e9;
    let wps = link.waveplates_per_span;
    for span in 0..link.n_spans {
        let plates = &record.waveplates[span * wps..(span + 1) * wps];
        let mut prev: Option<Vec<C64>> = None;
        for wp in plates {
            let dh = st.dgd_half(wp);
            let (x, y) = (&mut field.x, &mut field.y);
            st.linear(x, y, prev.as_deref(), Some(&wp.rotation), Some(&dh));
            st.nonlinear(x, y)?;
            for _ in 1..st.steps {
                st.linear(x, y, Some(&dh), None, Some(&dh));
                st.nonlinear(x, y)?;
            }
            prev = Some(dh);
        }
        st.linear(&mut field.x, &mut field.y, prev.as_deref(), None, None);
        field.scale(gain);
        if link.ase {
            let mut rng = batch_rng(seed, ASE_STREAM + span as u64);
            let s = (ase_var / 2.0).sqrt();
            for v in field.x.iter_mut().chain(field.y.iter_mut()) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *v += C64::new(re * s, im * s);
            }
        }
        tap(span + 1, &field)?;
    }
    Ok(record)
}

/// Propagates `w` over the whole link.
pub fn ssfm_propagate(
    w: &SampledWaveform,
    link: &LinkConfig,
    seed: u64,
) -> Result<(SampledWaveform, ChannelRecord), FiberError> {
    let mut out = None;
    let record = propagate_tapped(w, link, seed, |spans, f| {
        if spans == link.n_spans {
            out = Some(f.clone());
        }
        Ok(())
    })?;
    Ok((out.expect("final tap always runs"), record))
}
