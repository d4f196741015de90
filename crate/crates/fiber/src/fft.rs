use fourd_core::C64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Forward/inverse FFT pair of one size; the inverse is scaled by `1/n`.
pub(crate) struct FftPair {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
    n: usize,
}

impl FftPair {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        FftPair { fwd, inv, scratch: vec![C64::new(0.0, 0.0); len], n }
    }

    pub(crate) fn forward(&mut self, v: &mut [C64]) {
        self.fwd.process_with_scratch(v, &mut self.scratch);
    }

    pub(crate) fn inverse(&mut self, v: &mut [C64]) {
        self.inv.process_with_scratch(v, &mut self.scratch);
        let s = 1.0 / self.n as f64;
        for x in v.iter_mut() {
            *x *= s;
        }
    }
}

/// Frequency of FFT bin `k` of an `n`-point transform at `fs` (same unit as
/// `fs`), in `[-fs/2, fs/2)`.
pub(crate) fn bin_freq(k: usize, n: usize, fs: f64) -> f64 {
    let k = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
    k * fs / n as f64
}

/// Angular frequency grid in rad/ps for a sample rate in GHz.
pub(crate) fn omega_grid(n: usize, fs_ghz: f64) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * bin_freq(k, n, fs_ghz) * 1e-3).collect()
}
