//! Free-parameter optimization of the ring-based formats: GMI maximization
//! over ring ratio (golden section) or over ring ratio and angle (grid then
//! coordinate refinement).
//!
//! Every objective evaluation reuses one [`NoiseBank`], so the Monte Carlo
//! objective is a deterministic, smooth function of the parameters.

use crate::constellation::{Constellation4D, ConstellationError};
use crate::infometrics::{InfoError, NoiseBank};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use thiserror::Error;

/// `1/φ`.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Error)]
pub enum OptError {
    #[error("invalid bounds [{0}, {1}]")]
    Bounds(f64, f64),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error(transparent)]
    Build(#[from] ConstellationError),
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// One objective evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub ring_ratio: f64,
    pub rotation: f64,
    pub gmi: f64,
    pub std_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptResult {
    /// `(ring_ratio, rotation)`; rotation in radians.
    pub best_params: (f64, f64),
    pub best_gmi: f64,
    pub best_std_err: f64,
    pub trace: Vec<TracePoint>,
    /// The golden-section trace was not unimodal and a dense grid was used.
    pub used_fallback: bool,
}

impl OptResult {
    fn from_trace(trace: Vec<TracePoint>, used_fallback: bool) -> Self {
        let best =
            trace.iter().copied().reduce(|a, b| if b.gmi > a.gmi { b } else { a }).expect("at least one evaluation");
        OptResult {
            best_params: (best.ring_ratio, best.rotation),
            best_gmi: best.gmi,
            best_std_err: best.std_err,
            trace,
            used_fallback,
        }
    }

    /// Trace as CSV: `ring_ratio,rotation_deg,gmi,std_err`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("ring_ratio,rotation_deg,gmi,std_err\n");
        for t in &self.trace {
            let _ = writeln!(s, "{:.6},{:.4},{:.6},{:.6}", t.ring_ratio, t.rotation.to_degrees(), t.gmi, t.std_err);
        }
        s
    }
}

/// Monte Carlo budget of the objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Objective {
    pub snr_db: f64,
    pub n_samples: usize,
    pub seed: u64,
}

struct Evaluator<'a, F> {
    build: F,
    bank: &'a NoiseBank,
    snr_db: f64,
}

impl<F> Evaluator<'_, F>
where
    F: Fn(f64, f64) -> Result<Constellation4D, ConstellationError> + Sync,
{
    fn eval(&self, r: f64, a: f64) -> Result<TracePoint, OptError> {
        let c = (self.build)(r, a)?;
        let p = self.bank.snr_point(&c, self.snr_db)?;
        Ok(TracePoint { ring_ratio: r, rotation: a, gmi: p.gmi, std_err: p.std_err })
    }
}

fn check_bounds((lo, hi): (f64, f64)) -> Result<(), OptError> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(OptError::Bounds(lo, hi))
    }
}

/// Golden-section maximization of `f` over `[lo, hi]` until the bracket is
/// narrower than `tol`. Returns every evaluation.
fn golden(
    mut f: impl FnMut(f64) -> Result<TracePoint, OptError>,
    lo: f64,
    hi: f64,
    tol: f64,
    key: fn(&TracePoint) -> f64,
) -> Result<Vec<TracePoint>, OptError> {
    let mut trace = Vec::new();
    if hi - lo <= tol {
        trace.push(f(0.5 * (lo + hi))?);
        return Ok(trace);
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    trace.push(fc);
    trace.push(fd);
    while b - a > tol {
        if fc.gmi >= fd.gmi {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            trace.push(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            trace.push(fd);
        }
    }
    trace.sort_by(|p, q| key(p).total_cmp(&key(q)));
    Ok(trace)
}

/// Whether values sorted by the parameter rise to a single peak and fall,
/// allowing dips of `slack`.
pub fn is_unimodal(values: &[f64], slack: f64) -> bool {
    let Some(peak) = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i) else {
        return true;
    };
    values[..=peak].windows(2).all(|w| w[1] >= w[0] - slack) && values[peak..].windows(2).all(|w| w[1] <= w[0] + slack)
}

/// Settings of [`optimize_ring_ratio`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RingSearch {
    pub bounds: (f64, f64),
    pub tol: f64,
    /// Largest tolerated dip (bit) before the trace counts as multimodal.
    pub unimodal_slack: f64,
    /// Grid points of the fallback search.
    pub fallback_points: usize,
}

impl Default for RingSearch {
    fn default() -> Self {
        RingSearch { bounds: (0.3, 1.0), tol: 2e-3, unimodal_slack: 2e-3, fallback_points: 36 }
    }
}

/// Maximizes GMI over the ring ratio with the rotation fixed at `rotation`.
pub fn optimize_ring_ratio<F>(
    build: F,
    rotation: f64,
    obj: &Objective,
    search: &RingSearch,
) -> Result<OptResult, OptError>
where
    F: Fn(f64, f64) -> Result<Constellation4D, ConstellationError> + Sync,
{
    check_bounds(search.bounds)?;
    if search.tol.is_nan() || search.tol <= 0.0 {
        return Err(OptError::Settings(format!("tolerance {}", search.tol)));
    }
    let bank = NoiseBank::new(obj.n_samples, obj.seed)?;
    let ev = Evaluator { build, bank: &bank, snr_db: obj.snr_db };
    let (lo, hi) = search.bounds;
    if lo == hi {
        return Ok(OptResult::from_trace(vec![ev.eval(lo, rotation)?], false));
    }
    let trace = golden(|r| ev.eval(r, rotation), lo, hi, search.tol, |t| t.ring_ratio)?;
    let values: Vec<f64> = trace.iter().map(|t| t.gmi).collect();
    if is_unimodal(&values, search.unimodal_slack) {
        return Ok(OptResult::from_trace(trace, false));
    }
    let n = search.fallback_points.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let mut grid: Vec<TracePoint> =
        (0..n).into_par_iter().map(|k| ev.eval(lo + k as f64 * step, rotation)).collect::<Result<_, _>>()?;
    let best = OptResult::from_trace(grid.clone(), true).best_params.0;
    let local =
        golden(|r| ev.eval(r, rotation), (best - step).max(lo), (best + step).min(hi), search.tol, |t| t.ring_ratio)?;
    grid.extend(local);
    grid.sort_by(|p, q| p.ring_ratio.total_cmp(&q.ring_ratio));
    Ok(OptResult::from_trace(grid, true))
}

/// Settings of [`optimize_params_2d`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSearch {
    pub ratio_bounds: (f64, f64),
    /// Radians.
    pub angle_bounds: (f64, f64),
    /// Coarse grid points along ratio and angle.
    pub grid: (usize, usize),
    /// Rounds of alternating golden-section refinement.
    pub refine_rounds: usize,
    pub ratio_tol: f64,
    pub angle_tol: f64,
}

/// Coarse `(ratio, angle)` grid, then alternating golden-section refinement
/// of each coordinate inside one coarse cell around the incumbent.
pub fn optimize_params_2d<F>(build: F, obj: &Objective, search: &GridSearch) -> Result<OptResult, OptError>
where
    F: Fn(f64, f64) -> Result<Constellation4D, ConstellationError> + Sync,
{
    check_bounds(search.ratio_bounds)?;
    check_bounds(search.angle_bounds)?;
    let (nr, na) = search.grid;
    if nr == 0 || na == 0 || !(search.ratio_tol > 0.0 && search.angle_tol > 0.0) {
        return Err(OptError::Settings("grid sizes and tolerances must be positive".into()));
    }
    let bank = NoiseBank::new(obj.n_samples, obj.seed)?;
    let ev = Evaluator { build, bank: &bank, snr_db: obj.snr_db };
    let lin = |(lo, hi): (f64, f64), n: usize, k: usize| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    let cells: Vec<(f64, f64)> = (0..nr)
        .flat_map(|i| (0..na).map(move |j| (i, j)))
        .map(|(i, j)| (lin(search.ratio_bounds, nr, i), lin(search.angle_bounds, na, j)))
        .collect();
    let mut trace: Vec<TracePoint> = cells.par_iter().map(|&(r, a)| ev.eval(r, a)).collect::<Result<_, _>>()?;
    let dr = if nr > 1 { (search.ratio_bounds.1 - search.ratio_bounds.0) / (nr - 1) as f64 } else { 0.0 };
    let da = if na > 1 { (search.angle_bounds.1 - search.angle_bounds.0) / (na - 1) as f64 } else { 0.0 };
    let mut best = OptResult::from_trace(trace.clone(), false).best_params;
    for _ in 0..search.refine_rounds {
        let (lo, hi) = ((best.0 - dr).max(search.ratio_bounds.0), (best.0 + dr).min(search.ratio_bounds.1));
        trace.extend(golden(|r| ev.eval(r, best.1), lo, hi, search.ratio_tol, |t| t.ring_ratio)?);
        best = OptResult::from_trace(trace.clone(), false).best_params;
        let (lo, hi) = ((best.1 - da).max(search.angle_bounds.0), (best.1 + da).min(search.angle_bounds.1));
        trace.extend(golden(|a| ev.eval(best.0, a), lo, hi, search.angle_tol, |t| t.rotation)?);
        best = OptResult::from_trace(trace.clone(), false).best_params;
    }
    Ok(OptResult::from_trace(trace, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(t: f64) -> TracePoint {
        TracePoint { ring_ratio: t, rotation: 0.0, gmi: -(t - 0.3).powi(2), std_err: 0.0 }
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let tr = golden(|t| Ok(fake(t)), 0.0, 1.0, 1e-6, |t| t.ring_ratio).unwrap();
        let best = OptResult::from_trace(tr, false);
        assert!((best.best_params.0 - 0.3).abs() < 1e-6);
    }

    #[test]
    fn unimodality_check() {
        assert!(is_unimodal(&[1.0, 2.0, 3.0, 2.0], 0.0));
        assert!(is_unimodal(&[1.0, 0.999, 3.0, 2.0], 0.01));
        assert!(!is_unimodal(&[3.0, 1.0, 3.1, 2.0], 0.01));
        assert!(is_unimodal(&[], 0.0));
    }

    #[test]
    fn rejects_inverted_bounds() {
        let obj = Objective { snr_db: 8.0, n_samples: 10_000, seed: 0 };
        let s = RingSearch { bounds: (0.6, 0.4), ..Default::default() };
        let r = optimize_ring_ratio(crate::constellation::build_rs64, 0.0, &obj, &s);
        assert!(matches!(r, Err(OptError::Bounds(..))));
    }
}
