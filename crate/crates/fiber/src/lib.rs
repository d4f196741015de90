//! WDM multi-span fiber link: transmitter, Manakov split-step propagation
//! with PMD waveplates and EDFAs, and a genie-aided coherent receiver for the
//! center channel.
//!
//! Units: time in ps, frequency in GHz (sample rates) and rad/ps (angular
//! grids), length in km, power in W (configs use dBm), β₂ in ps²/km.

pub mod config;
mod fft;
pub mod rx;
pub mod ssfm;
pub mod sweep;
pub mod tx;

pub use config::{DgdModel, LinkConfig, Scale, WdmConfig};
pub use rx::{receive_center_channel, RxOptions, RxResult};
pub use ssfm::{ssfm_propagate, ChannelRecord};
pub use sweep::{distance_sweep, power_sweep, SweepRow, SweepSettings};
pub use tx::{wdm_transmit, TxRecord};

use fourd_core::infometrics::InfoError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FiberError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sample rate {sample_rate_ghz} GHz does not cover the WDM band with guard ({required_ghz} GHz needed)")]
    Aliasing { sample_rate_ghz: f64, required_ghz: f64 },
    #[error("mean nonlinear phase {phase:.3e} rad in one step exceeds {limit:.3e} rad; increase steps_per_waveplate")]
    StepAccuracy { phase: f64, limit: f64 },
    #[error("channel record covers {have} spans, {want} requested")]
    MissingRecord { have: usize, want: usize },
    #[error("waveform length {got} does not match the configuration ({want})")]
    Length { got: usize, want: usize },
    #[error(transparent)]
    Info(#[from] InfoError),
}
