use std::path::Path;
use std::process::{Command, Output};

use semiloc_cli::config::{Experiment, ExperimentConfig, Scale};
use semiloc_cli::output::Metadata;
use semiloc_cli::presets::preset;
use semiloc_core::perturbation::mean_tail;

fn semiloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiloc"))
        .args(args)
        .env_remove("SEMILOC_OUT")
        .output()
        .expect("spawn semiloc")
}

fn header_and_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> String {
    let path = dir.join(format!("{}-config.json", cfg.name));
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

/// The fig2a preset shrunk to a 4³ lattice.
fn small_fig2a() -> ExperimentConfig {
    let mut c = preset("fig2a", Scale::Desk).unwrap();
    c.realizations = 4;
    if let Experiment::ReturnProbability(p) = &mut c.experiment {
        p.lengths = vec![4];
        p.disorders = vec![5.0, 60.0];
    }
    c
}

#[test]
fn schema_lists_the_documented_columns() {
    let out = semiloc(&["schema"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema_version"], 1);
    let cols = |preset: &str, file: &str| -> Vec<String> {
        serde_json::from_value(doc["presets"][preset][file].clone()).unwrap()
    };
    assert_eq!(
        cols("fig2a", "fig2a.csv")[..5],
        ["W_over_J", "g_c_over_J", "pi_mean", "pi_sem", "realizations"]
    );
    assert_eq!(
        cols("fig4a", "fig4a.csv")[..6],
        ["N", "I_mean", "I_min", "I_max", "window_t1", "window_t2"]
    );
    assert_eq!(cols("fig1c", "fig1c.csv")[..3], ["distance", "log_mean_amp2", "analytic_tail"]);
}

#[test]
fn presets_subcommand_lists_every_name() {
    let out = semiloc(&["presets"]);
    let names: Vec<&str> = std::str::from_utf8(&out.stdout).unwrap().lines().collect();
    assert_eq!(names, semiloc_cli::PRESET_NAMES);
}

#[test]
fn run_writes_csv_and_metadata_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_fig2a();
    let config = write_config(dir.path(), &cfg);
    let first = dir.path().join("first");
    let out = semiloc(&["run", "--config", &config, "--out", first.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = first.join("fig2a.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# semiloc "));
    assert!(text.contains("# schema_version: 1"));
    assert!(text.contains(&format!("# seed: {}", cfg.seed)));
    let (header, rows) = header_and_rows(&csv);
    assert_eq!(header[..5], ["W_over_J", "g_c_over_J", "pi_mean", "pi_sem", "realizations"]);
    assert_eq!(rows.len(), 4);

    let meta: Metadata =
        serde_json::from_str(&std::fs::read_to_string(first.join("fig2a.json")).unwrap()).unwrap();
    assert_eq!(meta.seed, cfg.seed);
    assert_eq!(meta.config.experiment, cfg.experiment);
    assert_eq!(meta.outputs[0].file, "fig2a.csv");
    assert_eq!(meta.outputs[0].rows, 4);
    assert!(meta.failures.is_empty());

    // The metadata file is itself a valid config.
    let second = dir.path().join("second");
    let out = semiloc(&[
        "run",
        "--config",
        first.join("fig2a.json").to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(&csv).unwrap(),
        std::fs::read(second.join("fig2a.csv")).unwrap()
    );
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &small_fig2a());
    let run = |seed: &str, sub: &str| {
        let d = dir.path().join(sub);
        let out = semiloc(&["run", "--config", &config, "--seed", seed, "--out", d.to_str().unwrap()]);
        assert!(out.status.success());
        header_and_rows(&d.join("fig2a.csv")).1
    };
    assert_ne!(run("1", "a"), run("2", "b"));
    assert_eq!(run("3", "c"), run("3", "d"));
}

#[test]
fn gc_flag_fills_analytic_tail() {
    let dir = tempfile::tempdir().unwrap();
    let out = semiloc(&[
        "run",
        "--preset",
        "fig1c",
        "--gc",
        "5",
        "--realizations",
        "20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = header_and_rows(&dir.path().join("fig1c.csv"));
    assert_eq!(header[..3], ["distance", "log_mean_amp2", "analytic_tail"]);
    let want = mean_tail(5.0, 25.0, 100).unwrap().value;
    for r in &rows {
        let v: f64 = r[2].parse().unwrap();
        assert!((v - want).abs() <= 1e-15 * want);
        assert_eq!(r[3], "5");
    }
    assert_eq!(rows.len(), 51);
    assert!(dir.path().join("fig1c_fit.csv").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_semiloc"))
        .args(["run", "--preset", "tail-check"])
        .env("SEMILOC_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("tail-check.csv").exists());
    assert!(dir.path().join("tail-check.json").exists());
}

#[test]
fn invalid_config_exits_with_field_message() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_fig2a();
    if let Experiment::ReturnProbability(p) = &mut cfg.experiment {
        p.couplings = vec![];
    }
    let config = write_config(dir.path(), &cfg);
    let out = semiloc(&["run", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("experiment.couplings"), "{err}");
    assert!(!dir.path().join("fig2a.csv").exists());

    std::fs::write(&config, r#"{"name": "x"}"#).unwrap();
    assert_eq!(semiloc(&["run", "--config", &config]).status.code(), Some(2));

    let out = semiloc(&["run", "--preset", "fig7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig7"));

    let out = semiloc(&["run", "--preset", "fig2a", "--realizations", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn show_prints_a_loadable_config() {
    let out = semiloc(&["show", "fig4a", "--scale", "paper"]);
    assert!(out.status.success());
    let cfg: ExperimentConfig = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg, preset("fig4a", Scale::Paper).unwrap());
}
