//! Construction, labeling and distance census of the 6 bit/4D formats.
//!
//! Every format is stored as 64 points indexed by their 6-bit label, with
//! b1 as the most significant bit of the index. Constellations returned by the
//! builders are normalized to unit mean energy per polarization, so the mean
//! 4D symbol energy is 2.

use crate::{C64, CONSTELLATION_SIZE};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Relative tolerance under which two squared distances count as equal.
pub const DISTANCE_REL_TOL: f64 = 1e-9;

/// Merge tolerance of the exact SED census.
pub const SED_MERGE_TOL: f64 = 1e-6;

/// Bin width that reproduces the published SED histogram bars.
///
/// Two distinct distances of 4D-2A-RS64 (0.9218 and 0.9373) share one bar in
/// the published figure; a 0.02 bin is the narrowest width that merges them.
pub const PUBLISHED_BIN_WIDTH: f64 = 0.02;

/// Ring ratio of 4D-2A-8PSK maximizing GMI at 8 dB SNR, as found by
/// `optimizer::optimize_ring_ratio` (2e6 samples, two seeds agree to 1e-3).
pub const TWO_A_8PSK_RING_RATIO_8DB: f64 = 0.68;

/// Ring ratio of 4D-64PRS maximizing GMI at 8 dB SNR, as found by
/// `optimizer::optimize_params_2d` (2e6 samples).
pub const PRS64_RING_RATIO_8DB: f64 = 0.538;

/// Angle of the outer pair of 4D-64PRS relative to the orthant diagonal
/// (radians), 8 dB optimum found together with [`PRS64_RING_RATIO_8DB`].
pub const PRS64_ANGLE_8DB: f64 = 25.6 * std::f64::consts::PI / 180.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstellationError {
    #[error("ring ratio {0} outside (0, 1]")]
    RingRatio(f64),
    #[error("expected {CONSTELLATION_SIZE} points, got {0}")]
    Size(usize),
    #[error("labels do not form a bijection onto the 6-bit words (label {0:06b} repeated)")]
    DuplicateLabel(u8),
    #[error("label {0} does not fit in 6 bits")]
    LabelRange(u32),
    #[error("point with label {0:06b} has a non-finite coordinate")]
    NonFinite(u8),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown format '{0}'")]
    UnknownFormat(String),
}

/// One 4D symbol: a complex amplitude on each polarization.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point4D {
    pub x: C64,
    pub y: C64,
}

impl Point4D {
    pub fn new(x: C64, y: C64) -> Self {
        Point4D { x, y }
    }

    /// Real coordinates `[Re x, Im x, Re y, Im y]`.
    pub fn coords(&self) -> [f64; 4] {
        [self.x.re, self.x.im, self.y.re, self.y.im]
    }

    pub fn energy(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr()
    }

    pub fn sq_dist(&self, other: &Point4D) -> f64 {
        (self.x - other.x).norm_sqr() + (self.y - other.y).norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.is_finite())
    }
}

/// The four formats compared throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FormatKind {
    #[serde(rename = "pdm-8qam-star")]
    Pdm8QamStar,
    #[serde(rename = "2a-8psk")]
    TwoA8psk,
    #[serde(rename = "64prs")]
    Prs64,
    #[serde(rename = "rs64")]
    Rs64,
}

impl FormatKind {
    pub const ALL: [FormatKind; 4] =
        [FormatKind::Pdm8QamStar, FormatKind::TwoA8psk, FormatKind::Prs64, FormatKind::Rs64];

    /// The three constant-modulus 4D formats.
    pub const FOUR_D: [FormatKind; 3] = [FormatKind::Rs64, FormatKind::Prs64, FormatKind::TwoA8psk];

    pub fn name(&self) -> &'static str {
        match self {
            FormatKind::Pdm8QamStar => "PDM-8QAM-star",
            FormatKind::TwoA8psk => "4D-2A-8PSK",
            FormatKind::Prs64 => "4D-64PRS",
            FormatKind::Rs64 => "4D-2A-RS64",
        }
    }

    /// Short identifier used in configs and CSV files.
    pub fn key(&self) -> &'static str {
        match self {
            FormatKind::Pdm8QamStar => "pdm-8qam-star",
            FormatKind::TwoA8psk => "2a-8psk",
            FormatKind::Prs64 => "64prs",
            FormatKind::Rs64 => "rs64",
        }
    }

    /// Default `(ring_ratio, angle)` of the format; the angle is unused by
    /// 4D-2A-8PSK and PDM-8QAM-star.
    pub fn default_params(&self) -> (f64, f64) {
        match self {
            FormatKind::Pdm8QamStar => (STAR_INNER_OVER_OUTER, 0.0),
            FormatKind::TwoA8psk => (TWO_A_8PSK_RING_RATIO_8DB, 0.0),
            FormatKind::Prs64 => (PRS64_RING_RATIO_8DB, PRS64_ANGLE_8DB),
            FormatKind::Rs64 => (0.5, FRAC_PI_8),
        }
    }

    /// Builds the format with explicit shaping parameters.
    pub fn build(&self, ring_ratio: f64, angle: f64) -> Result<Constellation4D, ConstellationError> {
        match self {
            FormatKind::Pdm8QamStar => Ok(build_pdm8qamstar()),
            FormatKind::TwoA8psk => build_2a8psk(ring_ratio),
            FormatKind::Prs64 => build_64prs(ring_ratio, angle),
            FormatKind::Rs64 => build_rs64(ring_ratio, angle),
        }
    }

    pub fn build_default(&self) -> Constellation4D {
        let (r, a) = self.default_params();
        self.build(r, a).expect("default parameters are valid")
    }
}

impl fmt::Display for FormatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for FormatKind {
    type Err = ConstellationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        FormatKind::ALL
            .into_iter()
            .find(|k| k.key() == lower || k.name().to_ascii_lowercase() == lower)
            .ok_or_else(|| ConstellationError::UnknownFormat(s.to_string()))
    }
}

/// 64 labeled 4D points. `points()[l]` is the point carrying label `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation4D {
    name: String,
    points: Vec<Point4D>,
    ring_ratio: f64,
    rotation: f64,
}

impl Constellation4D {
    /// Assembles a constellation from `(label, point)` pairs in any order.
    pub fn from_labeled(
        name: impl Into<String>,
        labeled: impl IntoIterator<Item = (u8, Point4D)>,
        ring_ratio: f64,
        rotation: f64,
    ) -> Result<Self, ConstellationError> {
        let mut slots: Vec<Option<Point4D>> = vec![None; CONSTELLATION_SIZE];
        let mut n = 0;
        for (label, p) in labeled {
            n += 1;
            let slot = slots.get_mut(label as usize).ok_or(ConstellationError::LabelRange(label as u32))?;
            if slot.is_some() {
                return Err(ConstellationError::DuplicateLabel(label));
            }
            if !p.is_finite() {
                return Err(ConstellationError::NonFinite(label));
            }
            *slot = Some(p);
        }
        if n != CONSTELLATION_SIZE {
            return Err(ConstellationError::Size(n));
        }
        Ok(Constellation4D {
            name: name.into(),
            points: slots.into_iter().map(|p| p.unwrap()).collect(),
            ring_ratio,
            rotation,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ring_ratio(&self) -> f64 {
        self.ring_ratio
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    /// Points in label order.
    pub fn points(&self) -> &[Point4D] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean energy of the X and Y polarizations.
    pub fn pol_energies(&self) -> (f64, f64) {
        let n = self.points.len() as f64;
        let ex = self.points.iter().map(|p| p.x.norm_sqr()).sum::<f64>() / n;
        let ey = self.points.iter().map(|p| p.y.norm_sqr()).sum::<f64>() / n;
        (ex, ey)
    }

    pub fn mean_energy(&self) -> f64 {
        let (ex, ey) = self.pol_energies();
        ex + ey
    }

    /// Rescales each polarization to unit mean energy.
    pub fn normalized(mut self) -> Self {
        let (ex, ey) = self.pol_energies();
        let (sx, sy) = (ex.sqrt().recip(), ey.sqrt().recip());
        for p in &mut self.points {
            p.x *= sx;
            p.y *= sy;
        }
        self
    }

    /// Applies `f` to every point, keeping the labels.
    pub fn map_points(mut self, mut f: impl FnMut(Point4D) -> Point4D) -> Self {
        for p in &mut self.points {
            *p = f(*p);
        }
        self
    }

    /// Same constellation with a common phase rotation on both polarizations.
    pub fn rotated(self, phase: f64) -> Self {
        let r = C64::from_polar(1.0, phase);
        self.map_points(|p| Point4D::new(p.x * r, p.y * r))
    }

    pub fn scaled(self, s: f64) -> Self {
        self.map_points(|p| Point4D::new(p.x * s, p.y * s))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// The point carrying the 6-bit word `bits` (b1 = MSB).
    pub fn map_bits(&self, bits: u8) -> Point4D {
        self.points[(bits & 0x3f) as usize]
    }

    /// Minimum-Euclidean-distance decision.
    pub fn demap_hard(&self, p: &Point4D) -> u8 {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (l, q) in self.points.iter().enumerate() {
            let d = q.sq_dist(p);
            if d < best_d {
                best_d = d;
                best = l;
            }
        }
        best as u8
    }

    /// Plain-text table, one row per symbol: binary label then
    /// `Re(x) Im(x) Re(y) Im(y)` with 12 significant digits.
    pub fn to_table(&self) -> String {
        let mut out = format!("# {} ring_ratio={:.11e} rotation={:.11e}\n", self.name, self.ring_ratio, self.rotation);
        for (l, p) in self.points.iter().enumerate() {
            let [a, b, c, d] = p.coords();
            out.push_str(&format!("{l:06b} {a:.11e} {b:.11e} {c:.11e} {d:.11e}\n"));
        }
        out
    }

    /// Inverse of [`Constellation4D::to_table`]. The comment header is optional.
    pub fn from_table(text: &str) -> Result<Self, ConstellationError> {
        let mut name = String::from("imported");
        let mut ring_ratio = f64::NAN;
        let mut rotation = f64::NAN;
        let mut rows = Vec::with_capacity(CONSTELLATION_SIZE);
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let mut parts = header.split_whitespace();
                if let Some(n) = parts.next() {
                    name = n.to_string();
                }
                for kv in parts {
                    match kv.split_once('=') {
                        Some(("ring_ratio", v)) => ring_ratio = v.parse().unwrap_or(f64::NAN),
                        Some(("rotation", v)) => rotation = v.parse().unwrap_or(f64::NAN),
                        _ => {}
                    }
                }
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 5 {
                return Err(ConstellationError::Parse {
                    line: line_no,
                    msg: format!("expected 5 columns, found {}", cols.len()),
                });
            }
            if cols[0].len() != 6 {
                return Err(ConstellationError::Parse {
                    line: line_no,
                    msg: format!("label '{}' is not a 6-bit binary string", cols[0]),
                });
            }
            let label = u8::from_str_radix(cols[0], 2)
                .map_err(|e| ConstellationError::Parse { line: line_no, msg: format!("label '{}': {e}", cols[0]) })?;
            let mut v = [0.0; 4];
            for (k, c) in cols[1..].iter().enumerate() {
                v[k] = c
                    .parse()
                    .map_err(|e| ConstellationError::Parse { line: line_no, msg: format!("value '{c}': {e}") })?;
            }
            rows.push((label, Point4D::new(C64::new(v[0], v[1]), C64::new(v[2], v[3]))));
        }
        Constellation4D::from_labeled(name, rows, ring_ratio, rotation)
    }
}

fn check_ratio(r: f64) -> Result<(), ConstellationError> {
    if r.is_finite() && r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(ConstellationError::RingRatio(r))
    }
}

/// Gray label of quadrant `k` (counter-clockwise from the first quadrant).
fn quadrant_gray(k: usize) -> u8 {
    [0b00, 0b01, 0b11, 0b10][k % 4]
}

fn gray(n: u8) -> u8 {
    n ^ (n >> 1)
}

/// 4D-2A-RS64: QPSK of radius R1 on one polarization, 8-PSK of radius
/// R2 = R1 / `ring_ratio` on the other.
///
/// Labels: `[b1 b2]` Gray-code the X quadrant, `[b3 b4]` the Y quadrant,
/// `b5` selects which polarization carries the 8-PSK (0: Y, 1: X) and `b6`
/// selects the 8-PSK point inside its quadrant. X-polarization 8-PSK points sit
/// on the QPSK diagonals and the main axes; on-axis points belong to the
/// clockwise neighbouring quadrant. The Y-polarization 8-PSK is rotated by
/// `rotation` with respect to the QPSK grid (π/8 in the reference design).
pub fn build_rs64(ring_ratio: f64, rotation: f64) -> Result<Constellation4D, ConstellationError> {
    check_ratio(ring_ratio)?;
    if !rotation.is_finite() {
        return Err(ConstellationError::Parse { line: 0, msg: "non-finite rotation".into() });
    }
    let (r1, r2) = (ring_ratio, 1.0);
    let qpsk = |q: usize| C64::from_polar(r1, FRAC_PI_4 + q as f64 * FRAC_PI_2);
    let mut pts = Vec::with_capacity(CONSTELLATION_SIZE);
    for qx in 0..4 {
        for qy in 0..4 {
            let quad_bits = (quadrant_gray(qx) << 4) | (quadrant_gray(qy) << 2);
            // Y carries the 8-PSK; b6 = 1 for the point closer to the imaginary axis.
            let base = qy as f64 * FRAC_PI_2 + rotation;
            let cand = [base, base + FRAC_PI_4];
            let towards_imag = |a: f64| a.sin().abs() - a.cos().abs();
            let (near_real, near_imag) =
                if towards_imag(cand[0]) < towards_imag(cand[1]) { (cand[0], cand[1]) } else { (cand[1], cand[0]) };
            for (b6, a) in [(0, near_real), (1, near_imag)] {
                pts.push((quad_bits | b6, Point4D::new(qpsk(qx), C64::from_polar(r2, a))));
            }
            // X carries the 8-PSK: diagonal point (b6 = 0) or the axis point at
            // the counter-clockwise edge of the quadrant (b6 = 1).
            let diag = qx as f64 * FRAC_PI_2 + FRAC_PI_4;
            let axis = (qx + 1) as f64 * FRAC_PI_2;
            for (b6, a) in [(0, diag), (1, axis)] {
                pts.push((quad_bits | 0b10 | b6, Point4D::new(C64::from_polar(r2, a), qpsk(qy))));
            }
        }
    }
    Ok(Constellation4D::from_labeled(FormatKind::Rs64.name(), pts, ring_ratio, rotation)?.normalized())
}

/// 4D-2A-8PSK (6 bit/4D member): two concentric 8-PSK rings per polarization
/// with complementary ring selection, X on the inner ring iff the two phase
/// indices have even sum. Labels are the 3-bit Gray codes of the X and Y
/// phase indices, so every single bit flip switches rings.
pub fn build_2a8psk(ring_ratio: f64) -> Result<Constellation4D, ConstellationError> {
    check_ratio(ring_ratio)?;
    let mut pts = Vec::with_capacity(CONSTELLATION_SIZE);
    for ix in 0..8u8 {
        for iy in 0..8u8 {
            let (rx, ry) = if (ix + iy) % 2 == 0 { (ring_ratio, 1.0) } else { (1.0, ring_ratio) };
            let p =
                Point4D::new(C64::from_polar(rx, ix as f64 * FRAC_PI_4), C64::from_polar(ry, iy as f64 * FRAC_PI_4));
            pts.push(((gray(ix) << 3) | gray(iy), p));
        }
    }
    Ok(Constellation4D::from_labeled(FormatKind::TwoA8psk.name(), pts, ring_ratio, 0.0)?.normalized())
}

/// 4D-64PRS: orthant-symmetric polarization ring switching.
///
/// In the first orthant the inner ring point lies on the diagonal and the two
/// outer ring points at π/4 ∓ `angle`. The four first-orthant symbols are
/// labeled 00, 01, 11, 10 around the cycle (X inner, Y outer at π/4 − angle),
/// (X outer at π/4 − angle, Y inner), (X inner, Y outer at π/4 + angle),
/// (X outer at π/4 + angle, Y inner); `[b1..b4]` are the signs of
/// `Re x, Im x, Re y, Im y` (1 = negative).
pub fn build_64prs(ring_ratio: f64, angle: f64) -> Result<Constellation4D, ConstellationError> {
    check_ratio(ring_ratio)?;
    if !angle.is_finite() {
        return Err(ConstellationError::Parse { line: 0, msg: "non-finite angle".into() });
    }
    let inner = C64::from_polar(ring_ratio, FRAC_PI_4);
    let lo = C64::from_polar(1.0, FRAC_PI_4 - angle);
    let hi = C64::from_polar(1.0, FRAC_PI_4 + angle);
    let first = [
        (0b00u8, Point4D::new(inner, lo)),
        (0b01, Point4D::new(lo, inner)),
        (0b11, Point4D::new(inner, hi)),
        (0b10, Point4D::new(hi, inner)),
    ];
    let mut pts = Vec::with_capacity(CONSTELLATION_SIZE);
    for orthant in 0..16u8 {
        let sign = |k: u8| if (orthant >> (3 - k)) & 1 == 1 { -1.0 } else { 1.0 };
        for &(sub, p) in &first {
            let q = Point4D::new(
                C64::new(sign(0) * p.x.re, sign(1) * p.x.im),
                C64::new(sign(2) * p.y.re, sign(3) * p.y.im),
            );
            pts.push(((orthant << 2) | sub, q));
        }
    }
    Ok(Constellation4D::from_labeled(FormatKind::Prs64.name(), pts, ring_ratio, angle)?.normalized())
}

/// Inner-over-outer radius of the star 8-QAM that equalizes the inner-ring
/// and inner-to-outer nearest distances.
pub const STAR_INNER_OVER_OUTER: f64 = std::f64::consts::SQRT_2 / (1.0 + 1.732_050_807_568_877_2);

/// Star 8-QAM labels: inner points at π/4 + kπ/2, outer points at kπ/2.
const STAR_INNER_LABELS: [u8; 4] = [0b000, 0b110, 0b101, 0b011];
const STAR_OUTER_LABELS: [u8; 4] = [0b010, 0b100, 0b111, 0b001];

/// The 2D star 8-QAM used on each polarization, indexed by its 3-bit label.
pub fn star8qam_2d() -> [C64; 8] {
    let mut pts = [C64::new(0.0, 0.0); 8];
    for k in 0..4 {
        pts[STAR_INNER_LABELS[k] as usize] = C64::from_polar(STAR_INNER_OVER_OUTER, FRAC_PI_4 + k as f64 * FRAC_PI_2);
        pts[STAR_OUTER_LABELS[k] as usize] = C64::from_polar(1.0, k as f64 * FRAC_PI_2);
    }
    pts
}

/// PDM-8QAM-star: the Cartesian product of two star 8-QAMs, `[b1 b2 b3]` on X.
pub fn build_pdm8qamstar() -> Constellation4D {
    let star = star8qam_2d();
    let pts = (0..CONSTELLATION_SIZE as u8).map(|l| (l, Point4D::new(star[(l >> 3) as usize], star[(l & 7) as usize])));
    Constellation4D::from_labeled(FormatKind::Pdm8QamStar.name(), pts, STAR_INNER_OVER_OUTER, 0.0)
        .expect("64 distinct labels")
        .normalized()
}

/// Table-style geometry summary of a constellation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometryMetrics {
    pub msed: f64,
    /// Number of point pairs at the MSED.
    pub kissing: usize,
    pub papr: f64,
    pub constant_modulus: bool,
    /// Every pair at the MSED differs in exactly one bit.
    pub gray_at_msed: bool,
}

fn hamming(a: usize, b: usize) -> u32 {
    ((a ^ b) as u32).count_ones()
}

/// All pairs `(i, j, d², hamming)` with `i < j`.
fn pair_census(c: &Constellation4D) -> Vec<(f64, u32)> {
    let pts = c.points();
    let mut out = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            out.push((pts[i].sq_dist(&pts[j]), hamming(i, j)));
        }
    }
    out
}

pub fn geometry_metrics(c: &Constellation4D) -> GeometryMetrics {
    let pairs = pair_census(c);
    let msed = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let at_min: Vec<_> = pairs.iter().filter(|p| p.0 <= msed * (1.0 + DISTANCE_REL_TOL)).collect();
    let energies: Vec<f64> = c.points().iter().map(Point4D::energy).collect();
    let mean = energies.iter().sum::<f64>() / energies.len() as f64;
    let max = energies.iter().cloned().fold(f64::MIN, f64::max);
    let min = energies.iter().cloned().fold(f64::MAX, f64::min);
    GeometryMetrics {
        msed,
        kissing: at_min.len(),
        papr: max / mean,
        constant_modulus: (max - min) <= 1e-12 * max,
        gray_at_msed: at_min.iter().all(|p| p.1 == 1),
    }
}

/// One bar of the SED histogram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SedBin {
    pub d2: f64,
    pub count_dh1: usize,
    pub count_dhgt1: usize,
}

impl SedBin {
    pub fn total(&self) -> usize {
        self.count_dh1 + self.count_dhgt1
    }
}

/// Pairwise squared-Euclidean-distance census split by Hamming distance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SedHistogram {
    pub entries: Vec<SedBin>,
}

impl SedHistogram {
    pub fn total(&self) -> usize {
        self.entries.iter().map(SedBin::total).sum()
    }

    /// `(d², count)` for the bins holding pairs at Hamming distance 1.
    pub fn hamming1(&self) -> Vec<(f64, usize)> {
        self.entries.iter().filter(|b| b.count_dh1 > 0).map(|b| (b.d2, b.count_dh1)).collect()
    }

    pub fn bin_at(&self, d2: f64, tol: f64) -> Option<&SedBin> {
        self.entries.iter().find(|b| (b.d2 - d2).abs() <= tol)
    }

    /// Merges consecutive bins lying within `width` of the first bin of their
    /// group. Each merged bin is reported at the distance of its most populated
    /// member (the smaller distance on ties).
    pub fn coarsen(&self, width: f64) -> SedHistogram {
        let mut out: Vec<SedBin> = Vec::new();
        let mut group: Vec<SedBin> = Vec::new();
        let flush = |group: &mut Vec<SedBin>, out: &mut Vec<SedBin>| {
            if group.is_empty() {
                return;
            }
            let mut rep = group[0];
            for b in group.iter() {
                if b.total() > rep.total() {
                    rep = *b;
                }
            }
            out.push(SedBin {
                d2: rep.d2,
                count_dh1: group.iter().map(|b| b.count_dh1).sum(),
                count_dhgt1: group.iter().map(|b| b.count_dhgt1).sum(),
            });
            group.clear();
        };
        for b in &self.entries {
            if let Some(first) = group.first() {
                if b.d2 - first.d2 > width {
                    flush(&mut group, &mut out);
                }
            }
            group.push(*b);
        }
        flush(&mut group, &mut out);
        SedHistogram { entries: out }
    }
}

/// Exact census: distances within [`SED_MERGE_TOL`] share a bin.
pub fn sed_histogram(c: &Constellation4D) -> SedHistogram {
    sed_histogram_with_tol(c, SED_MERGE_TOL)
}

pub fn sed_histogram_with_tol(c: &Constellation4D, merge_tol: f64) -> SedHistogram {
    let mut pairs = pair_census(c);
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut entries: Vec<SedBin> = Vec::new();
    let mut anchor = f64::NEG_INFINITY;
    for (d2, h) in pairs {
        if entries.is_empty() || d2 - anchor > merge_tol {
            anchor = d2;
            entries.push(SedBin { d2, count_dh1: 0, count_dhgt1: 0 });
        }
        let bin = entries.last_mut().unwrap();
        if h == 1 {
            bin.count_dh1 += 1;
        } else {
            bin.count_dhgt1 += 1;
        }
    }
    SedHistogram { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round2(v: f64) -> f64 {
        (v * 100.0).round() / 100.0
    }

    #[test]
    fn rs64_reference_metrics() {
        let c = build_rs64(0.5, FRAC_PI_8).unwrap();
        let m = geometry_metrics(&c);
        assert!((m.msed - 0.8).abs() < 1e-12);
        assert_eq!(m.kissing, 64);
        assert!((m.papr - 1.0).abs() < 1e-12);
        assert!(m.constant_modulus);
        assert!(m.gray_at_msed);
    }

    #[test]
    fn rs64_ring_switching() {
        let c = build_rs64(0.5, FRAC_PI_8).unwrap();
        let r1 = 0.4f64.sqrt();
        let r2 = 1.6f64.sqrt();
        let mut inner_x = 0;
        for p in c.points() {
            let (ax, ay) = (p.x.norm(), p.y.norm());
            if (ax - r1).abs() < 1e-12 {
                inner_x += 1;
                assert!((ay - r2).abs() < 1e-12);
            } else {
                assert!((ax - r2).abs() < 1e-12 && (ay - r1).abs() < 1e-12);
            }
        }
        assert_eq!(inner_x, 32);
    }

    #[test]
    fn rs64_projections_have_twelve_points() {
        let c = build_rs64(0.5, FRAC_PI_8).unwrap();
        for pol in 0..2 {
            let mut seen: Vec<C64> = Vec::new();
            for p in c.points() {
                let z = if pol == 0 { p.x } else { p.y };
                if !seen.iter().any(|s| (s - z).norm() < 1e-9) {
                    seen.push(z);
                }
            }
            assert_eq!(seen.len(), 12);
        }
    }

    #[test]
    fn quadrant_bits_follow_x_point() {
        let c = build_rs64(0.5, FRAC_PI_8).unwrap();
        for l in 0..64u8 {
            for bit in [5, 4] {
                let a = c.map_bits(l);
                let b = c.map_bits(l ^ (1 << bit));
                assert!((a.y - b.y).norm() < 1e-12, "Y moved for label {l:06b}");
                assert!((a.x - b.x).norm() > 1e-3);
            }
        }
    }

    #[test]
    fn rejects_bad_ring_ratio() {
        for r in [0.0, -0.1, 1.01, f64::NAN] {
            assert!(build_rs64(r, FRAC_PI_8).is_err());
            assert!(build_2a8psk(r).is_err());
            assert!(build_64prs(r, 0.4).is_err());
        }
    }

    #[test]
    fn two_a_8psk_at_unit_ratio() {
        let c = build_2a8psk(1.0).unwrap();
        assert_eq!(c.len(), 64);
        let m = geometry_metrics(&c);
        assert!(m.constant_modulus);
        // With coinciding rings the format is PDM-8PSK: 64 distinct positions.
        assert!(m.msed > 0.5);
    }

    #[test]
    fn star_is_not_gray_and_has_papr() {
        let c = build_pdm8qamstar();
        let m = geometry_metrics(&c);
        assert_eq!(m.kissing, 192);
        assert!(!m.gray_at_msed);
        assert!(!m.constant_modulus);
        assert_eq!(round2(m.papr), 1.58);
    }

    #[test]
    fn histogram_totals() {
        for k in FormatKind::ALL {
            let h = sed_histogram(&k.build_default());
            assert_eq!(h.total(), 64 * 63 / 2);
            assert!(h.entries.windows(2).all(|w| w[0].d2 < w[1].d2));
            let dh1: usize = h.entries.iter().map(|b| b.count_dh1).sum();
            assert_eq!(dh1, 64 * 6 / 2);
        }
    }

    #[test]
    fn coarsen_merges_close_bins() {
        let h = SedHistogram {
            entries: vec![
                SedBin { d2: 1.0, count_dh1: 1, count_dhgt1: 0 },
                SedBin { d2: 1.01, count_dh1: 2, count_dhgt1: 3 },
                SedBin { d2: 2.0, count_dh1: 0, count_dhgt1: 1 },
            ],
        };
        let c = h.coarsen(0.02);
        assert_eq!(c.entries.len(), 2);
        assert_eq!(c.entries[0].d2, 1.01);
        assert_eq!(c.entries[0].total(), 6);
    }

    #[test]
    fn table_round_trip() {
        let c = build_rs64(0.5, FRAC_PI_8).unwrap();
        let back = Constellation4D::from_table(&c.to_table()).unwrap();
        assert_eq!(back.name(), "4D-2A-RS64");
        for (a, b) in c.points().iter().zip(back.points()) {
            assert!(a.sq_dist(b) < 1e-20);
        }
    }

    #[test]
    fn table_parse_errors() {
        let c = build_rs64(0.5, FRAC_PI_8).unwrap();
        let text = c.to_table();
        let dup = text.replacen("000001", "000000", 1);
        assert!(matches!(Constellation4D::from_table(&dup), Err(ConstellationError::DuplicateLabel(0))));
        let short: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(Constellation4D::from_table(&short), Err(ConstellationError::Size(9))));
        let bad = text.replacen("000000 ", "000000 x", 1);
        assert!(matches!(Constellation4D::from_table(&bad), Err(ConstellationError::Parse { .. })));
    }

    #[test]
    fn format_names_parse() {
        for k in FormatKind::ALL {
            assert_eq!(k.key().parse::<FormatKind>().unwrap(), k);
            assert_eq!(k.name().parse::<FormatKind>().unwrap(), k);
        }
        assert!("16qam".parse::<FormatKind>().is_err());
    }
}
