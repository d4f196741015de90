use fourd_cli::{check_budget, run, CliError, Experiment, ExperimentSpec, RunConfig, CI_BUDGET_SECONDS};
use fourd_fiber::Scale;
use std::path::PathBuf;
use std::process::Command;

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("fourd-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn fourd(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fourd")).args(args).output().unwrap()
}

#[test]
fn list_names_every_experiment() {
    let out = fourd(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for e in Experiment::ALL {
        assert!(text.contains(e.name()), "{} missing", e.name());
    }
}

#[test]
fn binary_writes_tables_and_provenance() {
    let dir = scratch("bin");
    let out = fourd(&["run", "table2", "--scale", "ci", "--seed", "4", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let prov: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("table2.provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["seed"], 4);
    assert_eq!(prov["scale"], "ci");
    assert_eq!(prov["outputs"].as_array().unwrap().len(), 2);
    assert!(dir.join("table2-histogram.csv").exists());
}

#[test]
fn unknown_experiment_is_reported() {
    let out = fourd(&["run", "table3", "--scale", "ci", "--out", scratch("unknown").to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown experiment 'table3'"), "{err}");
}

#[test]
fn unknown_scale_is_reported() {
    let out = fourd(&["run", "table2", "--scale", "huge"]);
    assert!(!out.status.success());
}

#[test]
fn config_errors_name_the_offending_key() {
    let dir = scratch("cfg");
    let p = dir.join("bad.toml");
    std::fs::write(&p, "[imbalance]\nstep_dgs = 2.0\n").unwrap();
    let out = fourd(&[
        "run",
        "imbalance-grid",
        "--scale",
        "ci",
        "--config",
        p.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("imbalance.step_dgs"), "{err}");
}

#[test]
fn config_overrides_reach_the_run() {
    let dir = scratch("override");
    let p = dir.join("cfg.toml");
    std::fs::write(&p, "formats = [\"rs64\"]\n[dac]\nbits = [4]\n").unwrap();
    let spec = ExperimentSpec {
        experiment: Experiment::DacSweep,
        scale: Scale::Ci,
        config_path: Some(p),
        seed: None,
        out_dir: dir.clone(),
    };
    run(&spec).unwrap();
    let csv = std::fs::read_to_string(dir.join("dac-sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    assert!(csv.lines().nth(1).unwrap().starts_with("rs64,4,"));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let spec = ExperimentSpec {
        experiment: Experiment::Table2,
        scale: Scale::Ci,
        config_path: Some("/nonexistent/fourd.toml".into()),
        seed: None,
        out_dir: scratch("missing"),
    };
    assert!(matches!(run(&spec), Err(CliError::Io { .. })));
}

#[test]
fn ci_profile_fits_the_budget() {
    let cfg = RunConfig::for_scale(Scale::Ci);
    for e in Experiment::ALL {
        let s = check_budget(e, Scale::Ci, &cfg).unwrap();
        assert!(s <= CI_BUDGET_SECONDS, "{}: {s}", e.name());
    }
}

#[test]
fn oversized_ci_runs_are_refused() {
    let mut cfg = RunConfig::for_scale(Scale::Ci);
    cfg.awgn.samples = 100_000_000;
    assert!(matches!(check_budget(Experiment::GmiVsSnr, Scale::Ci, &cfg), Err(CliError::Budget { .. })));
    // The same configuration is allowed outside the ci profile.
    assert!(check_budget(Experiment::GmiVsSnr, Scale::Desk, &cfg).is_ok());
}

#[test]
fn seed_changes_monte_carlo_tables() {
    let mut cfg = RunConfig::for_scale(Scale::Ci);
    let a = Experiment::GmiVsSnr.run(&cfg).unwrap();
    cfg.seed += 1;
    let b = Experiment::GmiVsSnr.run(&cfg).unwrap();
    assert_ne!(a[0].1, b[0].1);
}

#[test]
fn fiber_rows_are_sorted_by_sweep_key() {
    let cfg = RunConfig::for_scale(Scale::Ci);
    let t = Experiment::FiberDistanceSweep.run(&cfg).unwrap();
    let rows: Vec<Vec<String>> = t[0].1.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), cfg.formats.len() * cfg.fiber.spans.len() * cfg.fiber.powers_dbm.len() * cfg.fiber.n_seeds);
    let order = |f: &str| cfg.formats.iter().position(|k| k.key() == f).unwrap();
    let key = |r: &Vec<String>| (order(&r[0]), r[3].parse::<usize>().unwrap(), r[4].parse::<f64>().unwrap());
    assert!(rows.windows(2).all(|w| key(&w[0]) <= key(&w[1])));
}
