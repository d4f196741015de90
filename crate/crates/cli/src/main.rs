use clap::{Parser, Subcommand};
use fourd_cli::{init_threads, run, Experiment, ExperimentSpec, THREADS_ENV};
use fourd_fiber::Scale;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fourd", version, about = "4D modulation format experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV tables and provenance sidecar.
    #[command(after_help = format!("Set {THREADS_ENV} to override the worker thread count."))]
    Run {
        /// table2, gmi-vs-snr, ring-opt, imbalance-grid, dac-sweep,
        /// fiber-power-sweep or fiber-distance-sweep.
        experiment: String,
        /// TOML file overriding fields of the scale profile.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// ci, desk or full.
        #[arg(long, default_value = "desk")]
        scale: String,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// List the experiments.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<(), fourd_cli::CliError> {
        init_threads()?;
        match cli.command {
            Command::List => {
                for e in Experiment::ALL {
                    println!("{:<22} {} (reference scale: {})", e.name(), e.summary(), e.reference_scale());
                }
            }
            Command::Run { experiment, config, seed, scale, out } => {
                let scale: Scale = scale.parse()?;
                let spec =
                    ExperimentSpec { experiment: experiment.parse()?, scale, config_path: config, seed, out_dir: out };
                for p in run(&spec)? {
                    println!("{}", p.display());
                }
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
