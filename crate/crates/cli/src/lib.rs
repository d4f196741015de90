//! Batch runner: resolves a run configuration, executes a named experiment
//! and writes its CSV tables with a JSON provenance sidecar.

pub mod config;
pub mod experiments;

pub use config::RunConfig;
pub use experiments::{Experiment, Tables};

use fourd_core::constellation::ConstellationError;
use fourd_core::impairments::ImpairmentError;
use fourd_core::infometrics::InfoError;
use fourd_core::optimizer::OptError;
use fourd_fiber::{FiberError, Scale};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "FOURD_THREADS";

/// Estimated single-core seconds allowed for `--scale ci`.
pub const CI_BUDGET_SECONDS: f64 = 120.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown experiment '{0}' (expected one of: table2, gmi-vs-snr, ring-opt, imbalance-grid, dac-sweep, fiber-power-sweep, fiber-distance-sweep)")]
    UnknownExperiment(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("estimated run time {estimate:.0} s exceeds the ci budget of {budget:.0} s; use --scale desk or reduce the configuration")]
    Budget { estimate: f64, budget: f64 },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Impairment(#[from] ImpairmentError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Fiber(#[from] FiberError),
}

/// Everything needed to run one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub scale: Scale,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.clone(), source })?;
                RunConfig::from_toml(self.scale, &text)?
            }
            None => RunConfig::for_scale(self.scale),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct Provenance<'a> {
    experiment: &'a str,
    summary: &'a str,
    scale: String,
    reference_scale: String,
    seed: u64,
    version: &'a str,
    threads: usize,
    wall_time_s: f64,
    estimated_s: f64,
    config_file: Option<String>,
    outputs: Vec<&'a str>,
    config: &'a RunConfig,
}

/// Refuses ci runs whose estimated cost exceeds [`CI_BUDGET_SECONDS`].
pub fn check_budget(e: Experiment, scale: Scale, cfg: &RunConfig) -> Result<f64, CliError> {
    let estimate = e.estimated_seconds(cfg);
    if scale == Scale::Ci && estimate > CI_BUDGET_SECONDS {
        return Err(CliError::Budget { estimate, budget: CI_BUDGET_SECONDS });
    }
    Ok(estimate)
}

/// Applies the thread-count override, once per process.
pub fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| CliError::Config(format!("{THREADS_ENV}={v} is not a thread count")))?;
        // A pool may already exist (e.g. in tests); the override is then moot.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Runs `spec` and writes its tables plus `<experiment>.provenance.json`.
/// Returns the written paths.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<PathBuf>, CliError> {
    let cfg = spec.resolve()?;
    let estimated_s = check_budget(spec.experiment, spec.scale, &cfg)?;
    let start = Instant::now();
    let tables = spec.experiment.run(&cfg)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(&spec.out_dir).map_err(|source| CliError::Io { path: spec.out_dir.clone(), source })?;
    let mut written = Vec::new();
    for (name, text) in &tables {
        let p = spec.out_dir.join(name);
        write(&p, text)?;
        written.push(p);
    }
    let prov = Provenance {
        experiment: spec.experiment.name(),
        summary: spec.experiment.summary(),
        scale: spec.scale.to_string(),
        reference_scale: spec.experiment.reference_scale().to_string(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        wall_time_s,
        estimated_s,
        config_file: spec.config_path.as_ref().map(|p| p.display().to_string()),
        outputs: tables.iter().map(|(n, _)| n.as_str()).collect(),
        config: &cfg,
    };
    let p = spec.out_dir.join(format!("{}.provenance.json", spec.experiment.name()));
    write(&p, &serde_json::to_string_pretty(&prov)?)?;
    written.push(p);
    Ok(written)
}
