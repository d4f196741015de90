//! Launch-power and distance sweeps over formats and seeds.

use crate::config::{LinkConfig, WdmConfig};
use crate::rx::{receive_center_channel, RxOptions, RxResult};
use crate::ssfm::{propagate_tapped, ChannelRecord};
use crate::tx::wdm_transmit;
use crate::FiberError;
use fourd_core::constellation::{Constellation4D, FormatKind};
use rayon::prelude::*;
use serde::Serialize;

/// GMI (bit/4D symbol) used to define the reach.
pub const REACH_GMI: f64 = 4.8;

/// One received measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub format: String,
    pub baud_gbaud: f64,
    pub n_channels: usize,
    pub n_spans: usize,
    pub power_dbm: f64,
    pub snr_elec_db: f64,
    pub gmi: f64,
    pub gmi_std_err: f64,
    pub ber: f64,
    pub margin_db: f64,
    pub seed: u64,
}

impl SweepRow {
    fn new(kind: FormatKind, wdm: &WdmConfig, spans: usize, r: &RxResult) -> Self {
        SweepRow {
            format: kind.key().to_string(),
            baud_gbaud: wdm.baud_gbaud,
            n_channels: wdm.n_channels,
            n_spans: spans,
            power_dbm: wdm.launch_power_dbm,
            snr_elec_db: r.snr_elec_db,
            gmi: r.gmi,
            gmi_std_err: r.gmi_std_err,
            ber: r.pre_fec_ber,
            margin_db: r.system_margin_db,
            seed: wdm.seed,
        }
    }

    pub const CSV_HEADER: &'static str =
        "format,baud_gbaud,n_channels,n_spans,power_dbm,snr_elec_db,gmi,gmi_std_err,ber,margin_db,seed";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.2},{:.4},{:.8},{:.8},{:.6e},{:.4},{}",
            self.format,
            self.baud_gbaud,
            self.n_channels,
            self.n_spans,
            self.power_dbm,
            self.snr_elec_db,
            self.gmi,
            self.gmi_std_err,
            self.ber,
            self.margin_db,
            self.seed
        )
    }
}

pub fn rows_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SweepRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// Common settings of a sweep.
#[derive(Clone, Debug)]
pub struct SweepSettings {
    pub formats: Vec<FormatKind>,
    pub powers_dbm: Vec<f64>,
    pub seeds: Vec<u64>,
    pub rx: RxOptions,
    /// Monte Carlo samples for each format's AWGN BER reference.
    pub reference_samples: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            formats: FormatKind::ALL.to_vec(),
            powers_dbm: vec![-2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
            seeds: vec![1],
            rx: RxOptions::default(),
            reference_samples: 100_000,
        }
    }
}

fn prepared(s: &SweepSettings) -> Result<Vec<(FormatKind, Constellation4D, RxOptions)>, FiberError> {
    if s.formats.is_empty() || s.powers_dbm.is_empty() || s.seeds.is_empty() {
        return Err(FiberError::Config("sweep needs at least one format, power and seed".into()));
    }
    s.formats
        .iter()
        .map(|&k| {
            let c = k.build_default();
            let rx = s.rx.clone().with_reference(&c, s.reference_samples, 7)?;
            Ok((k, c, rx))
        })
        .collect()
}

/// Propagates every format/power/seed over `spans` spans and receives the
/// center channel after each listed span count (all channels carry the same
/// format). Rows are ordered by format, span count, power and seed.
pub fn distance_sweep(
    settings: &SweepSettings,
    spans: &[usize],
    link: &LinkConfig,
    wdm: &WdmConfig,
) -> Result<Vec<SweepRow>, FiberError> {
    let max = *spans.iter().max().ok_or_else(|| FiberError::Config("empty span list".into()))?;
    let link = LinkConfig { n_spans: max, ..link.clone() };
    let formats = prepared(settings)?;
    let mut jobs = Vec::new();
    for (fi, _) in formats.iter().enumerate() {
        for &p in &settings.powers_dbm {
            for &seed in &settings.seeds {
                jobs.push((fi, p, seed));
            }
        }
    }
    let results: Vec<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|&(fi, p, seed)| {
            let (kind, c, rx) = &formats[fi];
            let wdm = WdmConfig { launch_power_dbm: p, seed, ..wdm.clone() };
            let comb = vec![c.clone(); wdm.n_channels];
            let (w, tx) = wdm_transmit(&comb, &wdm)?;
            let mut taps = Vec::new();
            let record = propagate_tapped(&w, &link, seed, |k, f| {
                if k > 0 && spans.contains(&k) {
                    taps.push((k, f.clone()));
                }
                Ok(())
            })?;
            receive_taps(*kind, &taps, &record, &tx, &wdm, rx)
        })
        .collect::<Result<_, FiberError>>()?;
    let mut rows: Vec<SweepRow> = results.into_iter().flatten().collect();
    let order = |f: &str| settings.formats.iter().position(|k| k.key() == f);
    rows.sort_by(|a, b| {
        (order(&a.format), a.n_spans)
            .cmp(&(order(&b.format), b.n_spans))
            .then(a.power_dbm.total_cmp(&b.power_dbm))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

fn receive_taps(
    kind: FormatKind,
    taps: &[(usize, fourd_core::SampledWaveform)],
    record: &ChannelRecord,
    tx: &crate::tx::TxRecord,
    wdm: &WdmConfig,
    rx: &RxOptions,
) -> Result<Vec<SweepRow>, FiberError> {
    taps.iter()
        .map(|(k, f)| {
            let r = receive_center_channel(f, &record.truncated(*k)?, tx, wdm, rx)?;
            Ok(SweepRow::new(kind, wdm, *k, &r))
        })
        .collect()
}

/// Launch-power sweep at the full link length.
pub fn power_sweep(settings: &SweepSettings, link: &LinkConfig, wdm: &WdmConfig) -> Result<Vec<SweepRow>, FiberError> {
    distance_sweep(settings, &[link.n_spans], link, wdm)
}

/// Seed-averaged best launch power of one format at one distance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Optimum {
    pub format: String,
    pub n_spans: usize,
    pub power_dbm: f64,
    pub gmi: f64,
    pub snr_elec_db: f64,
    pub margin_db: f64,
}

/// GMI differences below this count as ties when picking the optimum power.
pub const GMI_TIE: f64 = 1e-4;

/// Power maximizing the seed-averaged GMI for every (format, span count).
/// Where GMI saturates (ties within [`GMI_TIE`]) the higher electrical SNR wins.
pub fn optima(rows: &[SweepRow]) -> Vec<Optimum> {
    let mut out: Vec<Optimum> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let (f, s) = (&rows[i].format, rows[i].n_spans);
        let mut j = i;
        let mut best: Option<Optimum> = None;
        while j < rows.len() && rows[j].format == *f && rows[j].n_spans == s {
            let p = rows[j].power_dbm;
            let group: Vec<&SweepRow> =
                rows[j..].iter().take_while(|r| r.format == *f && r.n_spans == s && r.power_dbm == p).collect();
            let m = group.len() as f64;
            let cand = Optimum {
                format: f.clone(),
                n_spans: s,
                power_dbm: p,
                gmi: group.iter().map(|r| r.gmi).sum::<f64>() / m,
                snr_elec_db: group.iter().map(|r| r.snr_elec_db).sum::<f64>() / m,
                margin_db: group.iter().map(|r| r.margin_db).sum::<f64>() / m,
            };
            let better = |b: &Optimum| {
                cand.gmi > b.gmi + GMI_TIE || ((cand.gmi - b.gmi).abs() <= GMI_TIE && cand.snr_elec_db > b.snr_elec_db)
            };
            if best.as_ref().is_none_or(better) {
                best = Some(cand);
            }
            j += group.len();
        }
        out.extend(best);
        i = j;
    }
    out
}

/// Longest span count whose optimum GMI is at least `threshold`, per format.
pub fn reach_spans(optima: &[Optimum], threshold: f64) -> Vec<(String, Option<usize>)> {
    let mut out: Vec<(String, Option<usize>)> = Vec::new();
    for o in optima {
        if out.last().is_none_or(|(f, _)| *f != o.format) {
            out.push((o.format.clone(), None));
        }
        if o.gmi >= threshold {
            let last = out.last_mut().expect("pushed above");
            last.1 = Some(last.1.map_or(o.n_spans, |s| s.max(o.n_spans)));
        }
    }
    out
}
