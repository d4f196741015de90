//! Dual-polarization sample streams.

use crate::constellation::Point4D;
use crate::C64;
use std::io::{self, Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WaveformError {
    #[error("rail lengths differ: x has {x}, y has {y}")]
    RailLength { x: usize, y: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("malformed waveform header: {0}")]
    Header(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Complex baseband field on two polarizations.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledWaveform {
    pub x: Vec<C64>,
    pub y: Vec<C64>,
    /// Samples per nanosecond (GHz).
    pub sample_rate: f64,
    /// Offset of the baseband center from the reference carrier (GHz).
    pub center_freq_offset: f64,
}

impl SampledWaveform {
    pub fn new(x: Vec<C64>, y: Vec<C64>, sample_rate: f64) -> Result<Self, WaveformError> {
        if x.len() != y.len() {
            return Err(WaveformError::RailLength { x: x.len(), y: y.len() });
        }
        let w = SampledWaveform { x, y, sample_rate, center_freq_offset: 0.0 };
        if let Some(i) = w.first_non_finite() {
            return Err(WaveformError::NonFinite(i));
        }
        Ok(w)
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        SampledWaveform { x: vec![z; len], y: vec![z; len], sample_rate, center_freq_offset: 0.0 }
    }

    pub fn from_points(points: &[Point4D], sample_rate: f64) -> Self {
        SampledWaveform {
            x: points.iter().map(|p| p.x).collect(),
            y: points.iter().map(|p| p.y).collect(),
            sample_rate,
            center_freq_offset: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn point(&self, i: usize) -> Point4D {
        Point4D::new(self.x[i], self.y[i])
    }

    fn first_non_finite(&self) -> Option<usize> {
        self.x
            .iter()
            .zip(&self.y)
            .position(|(a, b)| !(a.re.is_finite() && a.im.is_finite() && b.re.is_finite() && b.im.is_finite()))
    }

    /// Mean of `|x|² + |y|²` over all samples.
    pub fn mean_power(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let s: f64 = self.x.iter().zip(&self.y).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).sum();
        s / self.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|v| v.norm_sqr()).sum()
    }

    /// Peak-to-average ratio of the instantaneous dual-polarization power.
    pub fn papr(&self) -> f64 {
        let peak = self.x.iter().zip(&self.y).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).fold(0.0, f64::max);
        peak / self.mean_power()
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.x.iter_mut().chain(self.y.iter_mut()) {
            *v *= s;
        }
    }

    /// Writes a text header line `sample_rate=<GHz> length=<n>` followed by
    /// little-endian f64 samples interleaved as `Re x, Im x, Re y, Im y`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<(), WaveformError> {
        writeln!(w, "sample_rate={:.17e} length={}", self.sample_rate, self.len())?;
        for (a, b) in self.x.iter().zip(&self.y) {
            for v in [a.re, a.im, b.re, b.im] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, WaveformError> {
        let mut header = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            r.read_exact(&mut byte)?;
            if byte[0] == b'\n' {
                break;
            }
            header.push(byte[0]);
            if header.len() > 256 {
                return Err(WaveformError::Header("header line too long".into()));
            }
        }
        let header = String::from_utf8(header).map_err(|e| WaveformError::Header(e.to_string()))?;
        let mut sample_rate = None;
        let mut length = None;
        for kv in header.split_whitespace() {
            match kv.split_once('=') {
                Some(("sample_rate", v)) => sample_rate = v.parse::<f64>().ok(),
                Some(("length", v)) => length = v.parse::<usize>().ok(),
                _ => return Err(WaveformError::Header(format!("unexpected field '{kv}'"))),
            }
        }
        let (sample_rate, length) = match (sample_rate, length) {
            (Some(s), Some(n)) => (s, n),
            _ => return Err(WaveformError::Header(header)),
        };
        let mut buf = vec![0u8; length * 32];
        r.read_exact(&mut buf)?;
        let val = |i: usize| f64::from_le_bytes(buf[8 * i..8 * i + 8].try_into().unwrap());
        let mut x = Vec::with_capacity(length);
        let mut y = Vec::with_capacity(length);
        for k in 0..length {
            x.push(C64::new(val(4 * k), val(4 * k + 1)));
            y.push(C64::new(val(4 * k + 2), val(4 * k + 3)));
        }
        SampledWaveform::new(x, y, sample_rate)
    }
}
