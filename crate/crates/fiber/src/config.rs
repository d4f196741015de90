use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::FiberError;

/// Speed of light in nm/ps.
pub const C_NM_PER_PS: f64 = 2.997_924_58e5;
/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// How the DGD of each waveplate is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DgdModel {
    /// Every waveplate has the same DGD.
    Fixed,
    /// Gaussian DGD per waveplate with the given relative standard deviation;
    /// the mean is lowered so that the mean square DGD is unchanged.
    Gaussian { rel_std: f64 },
}

/// Fiber, span, amplifier and numerical parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub span_length_km: f64,
    pub n_spans: usize,
    /// ps/(nm·km).
    pub dispersion: f64,
    /// 1/(W·km).
    pub gamma: f64,
    /// dB/km.
    pub alpha_db: f64,
    /// ps/√km.
    pub pmd_coeff: f64,
    pub waveplates_per_span: usize,
    pub steps_per_waveplate: usize,
    pub edfa_nf_db: f64,
    pub center_wavelength_nm: f64,
    /// Inject amplifier noise.
    pub ase: bool,
    pub dgd_model: DgdModel,
    /// Largest mean-power nonlinear phase (rad) allowed in one step.
    pub max_nl_phase_per_step: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            span_length_km: 80.0,
            n_spans: 10,
            dispersion: 17.0,
            gamma: 1.32,
            alpha_db: 0.2,
            pmd_coeff: 0.04,
            waveplates_per_span: 50,
            steps_per_waveplate: 4,
            edfa_nf_db: 5.0,
            center_wavelength_nm: 1550.0,
            ase: true,
            dgd_model: DgdModel::Fixed,
            max_nl_phase_per_step: 0.05,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), FiberError> {
        let positive = [
            ("span_length_km", self.span_length_km),
            ("center_wavelength_nm", self.center_wavelength_nm),
            ("max_nl_phase_per_step", self.max_nl_phase_per_step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(FiberError::Config(format!("link.{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("dispersion", self.dispersion),
            ("gamma", self.gamma),
            ("alpha_db", self.alpha_db),
            ("pmd_coeff", self.pmd_coeff),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(FiberError::Config(format!("link.{name} must be non-negative, got {v}")));
            }
        }
        if self.waveplates_per_span == 0 || self.steps_per_waveplate == 0 {
            return Err(FiberError::Config("link.waveplates_per_span and link.steps_per_waveplate must be ≥ 1".into()));
        }
        if let DgdModel::Gaussian { rel_std } = self.dgd_model {
            if !(rel_std.is_finite() && rel_std >= 0.0) {
                return Err(FiberError::Config(format!("link.dgd_model.rel_std {rel_std}")));
            }
        }
        Ok(())
    }

    /// Group-velocity dispersion β₂ = −D·λ²/(2πc) in ps²/km.
    pub fn beta2(&self) -> f64 {
        -self.dispersion * self.center_wavelength_nm.powi(2) / (2.0 * PI * C_NM_PER_PS)
    }

    /// Power attenuation coefficient in 1/km.
    pub fn alpha_per_km(&self) -> f64 {
        self.alpha_db * std::f64::consts::LN_10 / 10.0
    }

    /// Manakov nonlinear coefficient `8/9·γ`.
    pub fn gamma_manakov(&self) -> f64 {
        8.0 / 9.0 * self.gamma
    }

    /// Amplifier power gain restoring one span.
    pub fn span_gain(&self) -> f64 {
        (self.alpha_per_km() * self.span_length_km).exp()
    }

    pub fn carrier_hz(&self) -> f64 {
        C_NM_PER_PS / self.center_wavelength_nm * 1e12
    }

    /// ASE power spectral density per polarization, `(NF/2)·h·ν·(G−1)` (W/Hz).
    pub fn ase_psd(&self) -> f64 {
        let nf = 10f64.powf(self.edfa_nf_db / 10.0);
        nf / 2.0 * PLANCK * self.carrier_hz() * (self.span_gain() - 1.0)
    }

    pub fn segment_length_km(&self) -> f64 {
        self.span_length_km / self.waveplates_per_span as f64
    }

    pub fn step_length_km(&self) -> f64 {
        self.segment_length_km() / self.steps_per_waveplate as f64
    }

    /// Root-mean-square waveplate DGD (ps) that makes the mean DGD of a
    /// length-`L` link `pmd_coeff·√L`: for many random waveplates the DGD is
    /// Maxwellian with mean `√(8/(3π))` times its RMS.
    pub fn segment_dgd_rms(&self) -> f64 {
        self.pmd_coeff * self.segment_length_km().sqrt() * (3.0 * PI / 8.0).sqrt()
    }

    pub fn total_length_km(&self) -> f64 {
        self.span_length_km * self.n_spans as f64
    }
}

/// WDM transmitter parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WdmConfig {
    pub n_channels: usize,
    pub baud_gbaud: f64,
    pub spacing_ghz: f64,
    pub rolloff: f64,
    pub launch_power_dbm: f64,
    pub samples_per_symbol: usize,
    pub n_symbols: usize,
    pub seed: u64,
}

impl Default for WdmConfig {
    fn default() -> Self {
        WdmConfig {
            n_channels: 3,
            baud_gbaud: 32.0,
            spacing_ghz: 50.0,
            rolloff: 0.1,
            launch_power_dbm: 0.0,
            samples_per_symbol: 6,
            n_symbols: 1 << 14,
            seed: 1,
        }
    }
}

impl WdmConfig {
    pub fn sample_rate_ghz(&self) -> f64 {
        self.baud_gbaud * self.samples_per_symbol as f64
    }

    pub fn n_samples(&self) -> usize {
        self.n_symbols * self.samples_per_symbol
    }

    /// Occupied optical bandwidth of the comb (GHz).
    pub fn occupied_band_ghz(&self) -> f64 {
        (self.n_channels.max(1) - 1) as f64 * self.spacing_ghz + self.baud_gbaud * (1.0 + self.rolloff)
    }

    /// Offset of channel `k` from the simulation center (GHz).
    pub fn channel_offset_ghz(&self, k: usize) -> f64 {
        (k as f64 - (self.n_channels as f64 - 1.0) / 2.0) * self.spacing_ghz
    }

    pub fn center_channel(&self) -> usize {
        self.n_channels / 2
    }

    pub fn launch_power_w(&self) -> f64 {
        1e-3 * 10f64.powf(self.launch_power_dbm / 10.0)
    }

    pub fn validate(&self) -> Result<(), FiberError> {
        if self.n_channels == 0 || self.n_symbols == 0 || self.samples_per_symbol < 2 {
            return Err(FiberError::Config("wdm needs ≥1 channel, ≥1 symbol and ≥2 samples per symbol".into()));
        }
        if !(self.rolloff > 0.0 && self.rolloff < 1.0) {
            return Err(FiberError::Config(format!("wdm.rolloff {}", self.rolloff)));
        }
        if !(self.baud_gbaud > 0.0 && self.launch_power_dbm.is_finite()) {
            return Err(FiberError::Config(
                "wdm.baud_gbaud and wdm.launch_power_dbm must be finite, baud positive".into(),
            ));
        }
        if self.n_channels > 1 && self.spacing_ghz < self.baud_gbaud * (1.0 + self.rolloff) {
            return Err(FiberError::Config(format!(
                "wdm.spacing_ghz {} is below the channel bandwidth {}",
                self.spacing_ghz,
                self.baud_gbaud * (1.0 + self.rolloff)
            )));
        }
        let need = 1.2 * self.occupied_band_ghz();
        if self.sample_rate_ghz() < need {
            return Err(FiberError::Aliasing { sample_rate_ghz: self.sample_rate_ghz(), required_ghz: need });
        }
        Ok(())
    }
}

/// Named parameter profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Seconds-scale smoke runs.
    Ci,
    /// 3 × 32 Gbaud on a 50 GHz grid, 10 spans, 2^14 symbols.
    Desk,
    /// 11 × 90 Gbaud on a 100 GHz grid, 20 spans, 2^16 symbols.
    Full,
}

impl Scale {
    pub fn link(self) -> LinkConfig {
        match self {
            Scale::Ci => LinkConfig { n_spans: 2, ..LinkConfig::default() },
            Scale::Desk => LinkConfig::default(),
            Scale::Full => LinkConfig { n_spans: 20, ..LinkConfig::default() },
        }
    }

    pub fn wdm(self) -> WdmConfig {
        match self {
            Scale::Ci => WdmConfig { n_symbols: 1 << 11, ..WdmConfig::default() },
            Scale::Desk => WdmConfig::default(),
            Scale::Full => WdmConfig {
                n_channels: 11,
                baud_gbaud: 90.0,
                spacing_ghz: 100.0,
                samples_per_symbol: 16,
                n_symbols: 1 << 16,
                ..WdmConfig::default()
            },
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = FiberError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ci" => Ok(Scale::Ci),
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(FiberError::Config(format!("unknown scale '{s}' (expected ci, desk or full)"))),
        }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scale::Ci => "ci",
            Scale::Desk => "desk",
            Scale::Full => "full",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta2_of_standard_fiber() {
        let b2 = LinkConfig::default().beta2();
        assert!((b2 + 21.68).abs() < 0.01, "{b2}");
    }

    #[test]
    fn profiles_validate() {
        for s in [Scale::Ci, Scale::Desk, Scale::Full] {
            s.link().validate().unwrap();
            s.wdm().validate().unwrap();
        }
    }

    #[test]
    fn undersampled_comb_is_rejected() {
        let w = WdmConfig { samples_per_symbol: 4, ..WdmConfig::default() };
        assert!(matches!(w.validate(), Err(FiberError::Aliasing { .. })));
    }

    #[test]
    fn ase_psd_magnitude() {
        // 16 dB gain, NF 5 dB at 1550 nm: about 7.9e-18 W/Hz.
        let p = LinkConfig::default().ase_psd();
        assert!((p / 7.86e-18 - 1.0).abs() < 0.02, "{p}");
    }
}
