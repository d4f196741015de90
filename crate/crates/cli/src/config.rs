//! Run configuration: scale profiles overlaid with an optional TOML file.

use crate::CliError;
use fourd_core::constellation::FormatKind;
use fourd_core::impairments::NoiseReference;
use fourd_fiber::{LinkConfig, Scale, WdmConfig};
use serde::{Deserialize, Serialize};
use toml::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed of every Monte Carlo experiment and first fiber seed.
    pub seed: u64,
    pub formats: Vec<FormatKind>,
    pub awgn: AwgnSection,
    pub ring: RingSection,
    pub imbalance: ImbalanceSection,
    pub dac: DacSection,
    pub fiber: FiberSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AwgnSection {
    pub snr_db: Vec<f64>,
    pub samples: usize,
    pub target_gmi: f64,
    pub tol_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSection {
    pub formats: Vec<FormatKind>,
    pub snr_db: Vec<f64>,
    pub samples: usize,
    pub ratio_bounds: [f64; 2],
    pub ratio_tol: f64,
    /// Two-parameter search (64PRS only).
    pub angle_bounds_deg: [f64; 2],
    pub angle_tol_deg: f64,
    pub grid: [usize; 2],
    pub refine_rounds: usize,
    /// Ring ratio whose GMI is reported next to the optimum.
    pub fixed_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImbalanceSection {
    pub snr_db: f64,
    pub max_phase_deg: f64,
    pub max_gain_db: f64,
    pub step_deg: f64,
    pub step_db: f64,
    pub screen_samples: usize,
    pub final_samples: usize,
    pub refine_top: usize,
    pub noise_reference: NoiseReference,
    /// Samples per cell of the symmetric heatmap.
    pub heatmap_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DacSection {
    pub bits: Vec<u32>,
    pub target_gmi: f64,
    pub samples: usize,
    pub tol_db: f64,
    pub samples_per_symbol: usize,
    pub rolloff: f64,
    pub span_symbols: usize,
    /// Quantizer full scale as a fraction of each rail's peak.
    pub full_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSection {
    pub link: LinkConfig,
    pub wdm: WdmConfig,
    pub powers_dbm: Vec<f64>,
    /// Span counts reported by the distance sweep.
    pub spans: Vec<usize>,
    /// Seeds `seed, seed+1, …`.
    pub n_seeds: usize,
    pub phase_window: usize,
    /// Monte Carlo samples of the AWGN BER reference of each format.
    pub reference_samples: usize,
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

impl RunConfig {
    pub fn for_scale(scale: Scale) -> Self {
        let desk = scale != Scale::Ci;
        let mc = |ci: usize, desk_n: usize| if desk { desk_n } else { ci };
        let (link, wdm) = (scale.link(), scale.wdm());
        let fiber = match scale {
            Scale::Ci => FiberSection {
                powers_dbm: vec![-2.0, 2.0],
                spans: vec![1, 2],
                n_seeds: 1,
                reference_samples: 20_000,
                ..FiberSection::base(link, wdm)
            },
            Scale::Desk => FiberSection {
                powers_dbm: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
                spans: vec![2, 4, 6, 8, 10],
                ..FiberSection::base(link, wdm)
            },
            Scale::Full => FiberSection {
                powers_dbm: vec![-1.0, 0.0, 1.0, 2.0, 3.0],
                spans: (20..=47).step_by(3).collect(),
                ..FiberSection::base(LinkConfig { n_spans: 47, ..link }, wdm)
            },
        };
        RunConfig {
            seed: 1,
            formats: FormatKind::ALL.to_vec(),
            awgn: AwgnSection {
                snr_db: if desk { grid(0.0, 16.0, 0.5) } else { grid(0.0, 16.0, 4.0) },
                samples: mc(20_000, 1_000_000),
                target_gmi: 4.8,
                tol_db: if desk { 0.005 } else { 0.05 },
            },
            ring: RingSection {
                formats: if desk { FormatKind::FOUR_D.to_vec() } else { vec![FormatKind::Rs64] },
                snr_db: if desk { grid(4.0, 12.0, 1.0) } else { vec![8.0] },
                samples: mc(20_000, 200_000),
                ratio_bounds: [0.3, 1.0],
                ratio_tol: if desk { 2e-3 } else { 1e-2 },
                angle_bounds_deg: [15.0, 35.0],
                angle_tol_deg: if desk { 0.1 } else { 1.0 },
                grid: if desk { [8, 9] } else { [3, 3] },
                refine_rounds: if desk { 2 } else { 1 },
                fixed_ratio: 0.5,
            },
            imbalance: ImbalanceSection {
                snr_db: 8.0,
                max_phase_deg: 15.0,
                max_gain_db: 1.7,
                step_deg: if desk { 1.0 } else { 5.0 },
                step_db: if desk { 0.1 } else { 0.85 },
                screen_samples: mc(1024, 4096),
                final_samples: mc(20_000, 200_000),
                refine_top: if desk { 16 } else { 4 },
                noise_reference: NoiseReference::Distorted,
                heatmap_samples: mc(10_000, 20_000),
            },
            dac: DacSection {
                bits: vec![8, 6, 5, 4, 3],
                target_gmi: 5.0,
                samples: mc(20_000, 200_000),
                tol_db: if desk { 0.005 } else { 0.05 },
                samples_per_symbol: 2,
                rolloff: 0.1,
                span_symbols: 64,
                full_scale: 1.0,
            },
            fiber,
        }
    }

    /// Scale profile with the keys of `toml_text` laid over it. Unknown keys
    /// and type mismatches are reported with their dotted path.
    pub fn from_toml(scale: Scale, toml_text: &str) -> Result<Self, CliError> {
        let user: toml::Table = toml_text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let mut base = Value::try_from(Self::for_scale(scale)).map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut base, Value::Table(user), "")?;
        let cfg: RunConfig = base.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fiber_seeds(&self) -> Vec<u64> {
        (0..self.fiber.n_seeds as u64).map(|k| self.seed + k).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |path: &str, why: &str| Err(CliError::Config(format!("{path}: {why}")));
        if self.formats.is_empty() {
            return bad("formats", "at least one format is required");
        }
        if self.awgn.snr_db.is_empty() {
            return bad("awgn.snr_db", "empty grid");
        }
        if self.ring.formats.is_empty() || self.ring.snr_db.is_empty() {
            return bad("ring", "formats and snr_db must be non-empty");
        }
        if self.dac.bits.iter().any(|&b| !(1..=16).contains(&b)) {
            return bad("dac.bits", "resolutions must lie in 1..=16");
        }
        if self.fiber.n_seeds == 0 || self.fiber.powers_dbm.is_empty() || self.fiber.spans.is_empty() {
            return bad("fiber", "n_seeds, powers_dbm and spans must be non-empty");
        }
        if let Some(s) = self.fiber.spans.iter().find(|&&s| s == 0 || s > self.fiber.link.n_spans) {
            return bad("fiber.spans", &format!("{s} is outside 1..={}", self.fiber.link.n_spans));
        }
        self.fiber.link.validate().map_err(|e| CliError::Config(format!("fiber.link: {e}")))?;
        self.fiber.wdm.validate().map_err(|e| CliError::Config(format!("fiber.wdm: {e}")))?;
        Ok(())
    }
}

impl FiberSection {
    fn base(link: LinkConfig, wdm: WdmConfig) -> Self {
        FiberSection {
            link,
            wdm,
            powers_dbm: vec![0.0],
            spans: vec![1],
            n_seeds: 3,
            phase_window: 64,
            reference_samples: 200_000,
        }
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) | Value::Float(_) => "number",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

fn merge(base: &mut Value, user: Value, path: &str) -> Result<(), CliError> {
    match (base, user) {
        // Tagged enums (e.g. the DGD model) may switch variant.
        (slot @ Value::Table(_), Value::Table(u)) if u.contains_key("kind") => {
            *slot = Value::Table(u);
            Ok(())
        }
        (Value::Table(b), Value::Table(u)) => {
            for (k, v) in u {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &sub)?,
                    None => return Err(CliError::Config(format!("{sub}: unknown key"))),
                }
            }
            Ok(())
        }
        (slot @ Value::Float(_), Value::Integer(i)) => {
            *slot = Value::Float(i as f64);
            Ok(())
        }
        (slot, v) if kind(slot) == kind(&v) => {
            *slot = match (&*slot, v) {
                (Value::Array(old), Value::Array(new)) if old.first().is_some_and(|x| matches!(x, Value::Float(_))) => {
                    Value::Array(
                        new.into_iter()
                            .map(|x| if let Value::Integer(i) = x { Value::Float(i as f64) } else { x })
                            .collect(),
                    )
                }
                (_, v) => v,
            };
            Ok(())
        }
        (slot, v) => Err(CliError::Config(format!("{path}: expected a {}, got a {}", kind(slot), kind(&v)))),
    }
}
