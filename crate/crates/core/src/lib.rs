//! Four-dimensional (dual-polarization) modulation formats for coherent
//! optical links.
//!
//! The crate builds the 6 bit/4D formats (4D-2A-RS64, 4D-2A-8PSK, 4D-64PRS
//! and PDM-8QAM-star), measures their distance/labeling properties, estimates
//! MI and GMI over the memoryless Gaussian channel, models transmitter
//! imperfections (MZM I-Q imbalance, finite DAC resolution) and optimizes the
//! free shaping parameters of each format.

pub mod constellation;
pub mod impairments;
pub mod infometrics;
pub mod optimizer;
pub mod waveform;

pub use constellation::{Constellation4D, FormatKind, GeometryMetrics, Point4D, SedHistogram};
pub use infometrics::{AwgnChannel, SnrPoint};
pub use waveform::SampledWaveform;

/// Complex baseband sample.
pub type C64 = num_complex::Complex64;

/// Bits carried by one 4D symbol.
pub const BITS_PER_SYMBOL: usize = 6;

/// Points in every format handled here.
pub const CONSTELLATION_SIZE: usize = 1 << BITS_PER_SYMBOL;

pub(crate) fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
