//! The named batch experiments. Each returns its result tables as
//! `(file name, CSV text)`; table bytes depend only on the configuration.

use crate::config::RunConfig;
use crate::CliError;
use fourd_core::constellation::Point4D;
use fourd_core::constellation::{geometry_metrics, sed_histogram, FormatKind, PUBLISHED_BIN_WIDTH};
use fourd_core::impairments::{
    axis, dac_sweep, imbalance_grid, imbalance_grid_csv, worst_case_gmi, DacConfig, SearchBudget,
};
use fourd_core::infometrics::{noise_variance, required_snr, NoiseBank, MIN_SAMPLES, REFERENCE_ENERGY};
use fourd_core::optimizer::{optimize_params_2d, optimize_ring_ratio, GridSearch, Objective, OptResult, RingSearch};
use fourd_fiber::rx::RxOptions;
use fourd_fiber::sweep::{optima, reach_spans, rows_csv, SweepSettings, REACH_GMI};
use fourd_fiber::{distance_sweep, power_sweep, Scale};
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Table2,
    GmiVsSnr,
    RingOpt,
    ImbalanceGrid,
    DacSweep,
    FiberPowerSweep,
    FiberDistanceSweep,
}

pub type Tables = Vec<(String, String)>;

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Table2,
        Experiment::GmiVsSnr,
        Experiment::RingOpt,
        Experiment::ImbalanceGrid,
        Experiment::DacSweep,
        Experiment::FiberPowerSweep,
        Experiment::FiberDistanceSweep,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Table2 => "table2",
            Experiment::GmiVsSnr => "gmi-vs-snr",
            Experiment::RingOpt => "ring-opt",
            Experiment::ImbalanceGrid => "imbalance-grid",
            Experiment::DacSweep => "dac-sweep",
            Experiment::FiberPowerSweep => "fiber-power-sweep",
            Experiment::FiberDistanceSweep => "fiber-distance-sweep",
        }
    }

    /// What the experiment reproduces.
    pub fn summary(&self) -> &'static str {
        match self {
            Experiment::Table2 => "geometry table of the four formats and their SED/Hamming histograms",
            Experiment::GmiVsSnr => {
                "AWGN GMI and MI versus SNR, required SNR at the target GMI and gaps to PDM-8QAM-star"
            }
            Experiment::RingOpt => {
                "GMI-optimal ring ratio (and 64PRS rotation) versus SNR, with GMI at the fixed ratio"
            }
            Experiment::ImbalanceGrid => {
                "worst-case GMI over MZM phase/gain imbalance and the symmetric imbalance heatmap"
            }
            Experiment::DacSweep => "required-SNR penalty versus DAC resolution at the target GMI",
            Experiment::FiberPowerSweep => {
                "center-channel GMI, SNR, BER and margin versus launch power over the WDM link"
            }
            Experiment::FiberDistanceSweep => "best-power GMI versus span count and reach at GMI 4.8",
        }
    }

    /// Scale at which the experiment matches its published counterpart;
    /// smaller scales are smoke runs.
    pub fn reference_scale(&self) -> Scale {
        match self {
            Experiment::FiberPowerSweep | Experiment::FiberDistanceSweep => Scale::Full,
            _ => Scale::Desk,
        }
    }

    /// Rough single-core cost in seconds, used by the compute guard.
    pub fn estimated_seconds(&self, cfg: &RunConfig) -> f64 {
        const MC: f64 = 1.2e-6;
        const FFT: f64 = 1.6e-7;
        let nf = cfg.formats.len() as f64;
        match self {
            Experiment::Table2 => 0.1,
            Experiment::GmiVsSnr => nf * (cfg.awgn.snr_db.len() as f64 + 14.0) * cfg.awgn.samples as f64 * MC,
            Experiment::RingOpt => {
                let per = cfg.ring.formats.iter().map(|f| {
                    if *f == FormatKind::Prs64 {
                        (cfg.ring.grid[0] * cfg.ring.grid[1]) as f64 + 30.0 * cfg.ring.refine_rounds as f64
                    } else {
                        50.0
                    }
                });
                per.sum::<f64>() * cfg.ring.snr_db.len() as f64 * cfg.ring.samples as f64 * MC
            }
            Experiment::ImbalanceGrid => {
                let i = &cfg.imbalance;
                let d = (2.0 * i.max_phase_deg / i.step_deg).floor() + 1.0;
                let g = (i.max_gain_db / i.step_db).floor() + 1.0;
                let screen = d * d / 2.0 * g * g * i.screen_samples as f64;
                let refine = 2.0 * i.refine_top as f64 * i.final_samples as f64;
                let heat = d * g * i.heatmap_samples as f64;
                nf * (screen + refine + heat) * MC
            }
            Experiment::DacSweep => nf * (cfg.dac.bits.len() as f64 + 1.0) * 16.0 * cfg.dac.samples as f64 * MC,
            Experiment::FiberPowerSweep | Experiment::FiberDistanceSweep => {
                let f = &cfg.fiber;
                let stages = (f.link.n_spans * f.link.waveplates_per_span * f.link.steps_per_waveplate) as f64;
                let runs = nf * f.powers_dbm.len() as f64 * f.n_seeds as f64;
                runs * stages * f.wdm.n_samples() as f64 * FFT + nf * 12.0 * f.reference_samples as f64 * MC
            }
        }
    }

    pub fn run(&self, cfg: &RunConfig) -> Result<Tables, CliError> {
        match self {
            Experiment::Table2 => table2(cfg),
            Experiment::GmiVsSnr => gmi_vs_snr(cfg),
            Experiment::RingOpt => ring_opt(cfg),
            Experiment::ImbalanceGrid => imbalance(cfg),
            Experiment::DacSweep => dac(cfg),
            Experiment::FiberPowerSweep => fiber(cfg, false),
            Experiment::FiberDistanceSweep => fiber(cfg, true),
        }
    }
}

impl FromStr for Experiment {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| CliError::UnknownExperiment(s.to_string()))
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn table2(cfg: &RunConfig) -> Result<Tables, CliError> {
    let mut t =
        String::from("format,ring_ratio,angle_deg,msed,n_d,hamming1_pairs,gray_at_msed,constant_modulus,papr\n");
    let mut h = String::from("format,d2,count_dh1,count_dhgt1\n");
    for &k in &cfg.formats {
        let (r, a) = k.default_params();
        let c = k.build_default();
        let m = geometry_metrics(&c);
        let hist = sed_histogram(&c);
        let pairs: Vec<String> =
            hist.coarsen(PUBLISHED_BIN_WIDTH).hamming1().iter().map(|(d, n)| format!("({d:.2} {n})")).collect();
        let _ = writeln!(
            t,
            "{},{r:.4},{:.3},{:.4},{},{},{},{},{:.4}",
            k.key(),
            a.to_degrees(),
            m.msed,
            m.kissing,
            pairs.join(" "),
            yes_no(m.gray_at_msed),
            yes_no(m.constant_modulus),
            m.papr
        );
        for b in &hist.entries {
            let _ = writeln!(h, "{},{:.6},{},{}", k.key(), b.d2, b.count_dh1, b.count_dhgt1);
        }
    }
    Ok(vec![("table2.csv".into(), t), ("table2-histogram.csv".into(), h)])
}

fn gmi_vs_snr(cfg: &RunConfig) -> Result<Tables, CliError> {
    let a = &cfg.awgn;
    let bank = NoiseBank::new(a.samples, cfg.seed)?;
    let mut curves = String::from("format,snr_db,gmi,gmi_std_err,mi,mi_std_err,n_samples,seed\n");
    let mut req = Vec::new();
    for &k in &cfg.formats {
        let c = k.build_default();
        let tx: Vec<[f64; 4]> = c.points().iter().map(Point4D::coords).collect();
        for &s in &a.snr_db {
            let acc = bank.rates(&tx, &c, noise_variance(REFERENCE_ENERGY, s))?;
            let ((g, gse), (m, mse)) = (acc.gmi(), acc.mi());
            let _ = writeln!(curves, "{},{s:.2},{g:.6},{gse:.6},{m:.6},{mse:.6},{},{}", k.key(), a.samples, cfg.seed);
        }
        req.push((k, required_snr(&c, a.target_gmi, a.tol_db, a.samples, cfg.seed)?.snr_db));
    }
    let star = req.iter().find(|(k, _)| *k == FormatKind::Pdm8QamStar).map(|r| r.1);
    let mut gaps = String::from("format,target_gmi,required_snr_db,gain_over_star_db\n");
    for (k, s) in &req {
        let gain = star.map_or(String::new(), |st| format!("{:.4}", st - s));
        let _ = writeln!(gaps, "{},{},{:.4},{gain}", k.key(), a.target_gmi, s);
    }
    Ok(vec![("gmi-vs-snr.csv".into(), curves), ("gmi-vs-snr-gaps.csv".into(), gaps)])
}

fn ring_opt(cfg: &RunConfig) -> Result<Tables, CliError> {
    let r = &cfg.ring;
    let mut summary = String::from(
        "format,snr_db,best_ratio,best_angle_deg,best_gmi,std_err,used_fallback,fixed_ratio,gmi_at_fixed\n",
    );
    let mut traces = String::from("format,snr_db,ring_ratio,rotation_deg,gmi,std_err\n");
    for &k in &r.formats {
        let (_, angle) = k.default_params();
        for &snr in &r.snr_db {
            let obj = Objective { snr_db: snr, n_samples: r.samples, seed: cfg.seed };
            let build = |ratio: f64, a: f64| k.build(ratio, a);
            let res: OptResult = if k == FormatKind::Prs64 {
                let search = GridSearch {
                    ratio_bounds: (r.ratio_bounds[0], r.ratio_bounds[1]),
                    angle_bounds: (r.angle_bounds_deg[0].to_radians(), r.angle_bounds_deg[1].to_radians()),
                    grid: (r.grid[0], r.grid[1]),
                    refine_rounds: r.refine_rounds,
                    ratio_tol: r.ratio_tol,
                    angle_tol: r.angle_tol_deg.to_radians(),
                };
                optimize_params_2d(build, &obj, &search)?
            } else {
                let search = RingSearch {
                    bounds: (r.ratio_bounds[0], r.ratio_bounds[1]),
                    tol: r.ratio_tol,
                    ..RingSearch::default()
                };
                optimize_ring_ratio(build, angle, &obj, &search)?
            };
            let at_fixed = optimize_ring_ratio(
                build,
                res.best_params.1,
                &obj,
                &RingSearch { bounds: (r.fixed_ratio, r.fixed_ratio), ..RingSearch::default() },
            )?;
            let _ = writeln!(
                summary,
                "{},{snr:.2},{:.5},{:.3},{:.6},{:.6},{},{},{:.6}",
                k.key(),
                res.best_params.0,
                res.best_params.1.to_degrees(),
                res.best_gmi,
                res.best_std_err,
                res.used_fallback,
                r.fixed_ratio,
                at_fixed.best_gmi
            );
            for t in &res.trace {
                let _ = writeln!(
                    traces,
                    "{},{snr:.2},{:.6},{:.4},{:.6},{:.6}",
                    k.key(),
                    t.ring_ratio,
                    t.rotation.to_degrees(),
                    t.gmi,
                    t.std_err
                );
            }
        }
    }
    Ok(vec![("ring-opt.csv".into(), summary), ("ring-opt-trace.csv".into(), traces)])
}

fn imbalance(cfg: &RunConfig) -> Result<Tables, CliError> {
    let i = &cfg.imbalance;
    let budget = SearchBudget {
        screen_samples: i.screen_samples,
        final_samples: i.final_samples,
        refine_top: i.refine_top,
        seed: cfg.seed,
        noise_reference: i.noise_reference,
    };
    let mut worst = String::from(
        "format,snr_db,nominal_gmi,floor_gmi,std_err,fluctuation,theta_x_deg,theta_y_deg,alpha_x_db,alpha_y_db,cells\n",
    );
    let devs: Vec<f64> = axis(i.max_phase_deg, i.step_deg)?;
    let gains: Vec<f64> = axis(i.max_gain_db, i.step_db)?;
    let mut heat = Vec::new();
    for &k in &cfg.formats {
        let c = k.build_default();
        let w = worst_case_gmi(&c, i.snr_db, i.max_phase_deg, i.max_gain_db, (i.step_deg, i.step_db), &budget)?;
        let _ = writeln!(
            worst,
            "{},{:.2},{:.6},{:.6},{:.6},{:.6},{:.3},{:.3},{:.3},{:.3},{}",
            k.key(),
            i.snr_db,
            w.nominal_gmi,
            w.min_gmi,
            w.std_err,
            w.fluctuation(),
            w.argmin.theta_x,
            w.argmin.theta_y,
            w.argmin.alpha_x_db,
            w.argmin.alpha_y_db,
            w.cells
        );
        heat.push((
            k.key(),
            imbalance_grid(&c, i.snr_db, &devs, &gains, i.heatmap_samples, cfg.seed, i.noise_reference)?,
        ));
    }
    let refs: Vec<(&str, &[_])> = heat.iter().map(|(k, v)| (*k, v.as_slice())).collect();
    Ok(vec![("imbalance-worst.csv".into(), worst), ("imbalance-grid.csv".into(), imbalance_grid_csv(&refs))])
}

fn dac(cfg: &RunConfig) -> Result<Tables, CliError> {
    let d = &cfg.dac;
    let base = DacConfig {
        bits: 8,
        samples_per_symbol: d.samples_per_symbol,
        rolloff: d.rolloff,
        span_symbols: d.span_symbols,
        full_scale: d.full_scale,
    };
    let mut out = String::from("format,bits,target_gmi,ideal_snr_db,required_snr_db,penalty_db\n");
    for &k in &cfg.formats {
        let s = dac_sweep(&k.build_default(), &d.bits, &base, d.target_gmi, d.tol_db, d.samples, cfg.seed)?;
        for (b, snr, pen) in &s.rows {
            let _ = writeln!(out, "{},{b},{},{:.4},{snr:.4},{pen:.4}", k.key(), d.target_gmi, s.ideal_snr_db);
        }
    }
    Ok(vec![("dac-sweep.csv".into(), out)])
}

fn fiber(cfg: &RunConfig, distance: bool) -> Result<Tables, CliError> {
    let f = &cfg.fiber;
    let settings = SweepSettings {
        formats: cfg.formats.clone(),
        powers_dbm: f.powers_dbm.clone(),
        seeds: cfg.fiber_seeds(),
        rx: RxOptions { phase_window: f.phase_window, ..RxOptions::default() },
        reference_samples: f.reference_samples.max(MIN_SAMPLES),
    };
    let rows = if distance {
        distance_sweep(&settings, &f.spans, &f.link, &f.wdm)?
    } else {
        power_sweep(&settings, &f.link, &f.wdm)?
    };
    let best = optima(&rows);
    let mut opt = String::from("format,n_spans,power_dbm,gmi,snr_elec_db,margin_db\n");
    for o in &best {
        let _ = writeln!(
            opt,
            "{},{},{:.2},{:.8},{:.4},{:.4}",
            o.format, o.n_spans, o.power_dbm, o.gmi, o.snr_elec_db, o.margin_db
        );
    }
    let name = if distance { "fiber-distance-sweep" } else { "fiber-power-sweep" };
    let mut tables = vec![(format!("{name}.csv"), rows_csv(&rows)), (format!("{name}-optima.csv"), opt)];
    if distance {
        let mut reach = String::from("format,reach_spans,reach_km,threshold_gmi\n");
        for (fmt, spans) in reach_spans(&best, REACH_GMI) {
            let (s, km) = spans.map_or((String::new(), String::new()), |s| {
                (s.to_string(), format!("{}", s as f64 * f.link.span_length_km))
            });
            let _ = writeln!(reach, "{fmt},{s},{km},{REACH_GMI}");
        }
        tables.push(("fiber-distance-reach.csv".into(), reach));
    }
    Ok(tables)
}
