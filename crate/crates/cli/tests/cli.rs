use std::path::{Path, PathBuf};
use std::process::Command as Process;

use cocycle_cli::config::run_defaults;
use cocycle_cli::{run_command, Command, RunConfig, RunReport};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> (RunConfig, String) {
    let path = configs().join(format!("{name}.toml"));
    (RunConfig::load(&path).unwrap(), std::fs::read_to_string(path).unwrap())
}

fn parse(text: &str) -> RunConfig {
    RunConfig::parse(text).unwrap()
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cocycle-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

/// Runs the binary and returns the exit code and stderr.
fn cli(cmd: &str, config_text: &str, tag: &str) -> (i32, String, PathBuf) {
    let dir = scratch(tag);
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config_text).unwrap();
    let out = Process::new(env!("CARGO_BIN_EXE_cocycle"))
        .args([cmd, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .args(["--label", "t"])
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned(), dir)
}

#[test]
fn config_round_trip() {
    for name in ["conformal", "rot07", "craig_simon", "rotation", "null", "markov", "negative_det", "non_primitive"] {
        let (cfg, text) = load(name);
        assert_eq!(parse(&cfg.to_toml()), cfg, "{name}");
        let report = RunReport::new("validate", &cfg, &text);
        let back: RunReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(parse(&back.config_text), cfg);
    }
}

#[test]
fn every_run_key_round_trips() {
    let mut text = String::from("[cocycle]\npreset = \"rot07\"\n\n[run]\n");
    for (key, default) in run_defaults() {
        // Debug output is valid TOML apart from the NaN spelling
        let v = if default == "NaN" { "nan".to_string() } else { default };
        text.push_str(&format!("{key} = {v}\n"));
    }
    let cfg = parse(&text);
    let again = parse(&cfg.to_toml());
    assert_eq!(again.run.depth, cfg.run.depth);
    assert_eq!(again.to_toml(), cfg.to_toml());
    assert_eq!(cfg.run.methods().len(), 4);
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(RunConfig::parse("[run]\nbogus = 1\n").is_err());
    assert!(RunConfig::parse("[cocycle]\npreset = \"rot07\"\np = [1.0]\n").unwrap().spec().is_err());
    assert!(RunConfig::parse("[cocycle]\npreset = \"nope\"\n").unwrap().spec().is_err());
    assert!(RunConfig::parse("[cocycle]\nmatrices = [[1,0,0,0]]\nsingular = [0]\np = [1.0]\n").unwrap().spec().is_err());
}

#[test]
fn cocycle_file_reference() {
    let dir = scratch("file");
    std::fs::write(dir.join("spec.toml"), "[cocycle]\nmatrices = [[1, 0, 0, 0], [2, 0, 0, 2]]\nsingular = [1]\np = [0.5, 0.5]\n").unwrap();
    std::fs::write(dir.join("run.toml"), "[cocycle]\nfile = \"spec.toml\"\n").unwrap();
    let cfg = RunConfig::load(&dir.join("run.toml")).unwrap();
    assert_eq!(cfg.spec().unwrap(), cocycle_core::presets::conformal());
}

#[test]
fn validate_exit_codes() {
    let (code, _, dir) = cli("validate", &load("conformal").1, "valid");
    assert_eq!(code, 0);
    assert!(dir.join("validate-t.json").exists() && dir.join("validate-t.csv").exists());

    let (code, err, dir) = cli("validate", &load("negative_det").1, "det");
    assert_eq!(code, 2);
    assert!(err.contains("letter_2"));
    let json = std::fs::read_to_string(dir.join("validate-t.json")).unwrap();
    assert!(json.contains("letter 2 has det"));

    let (code, _, dir) = cli("validate", &load("non_primitive").1, "prim");
    assert_eq!(code, 2);
    let json = std::fs::read_to_string(dir.join("validate-t.json")).unwrap();
    assert!(json.contains("not primitive"));
}

#[test]
fn usage_errors_exit_two() {
    let (code, err, _) = cli("scan", "[family]\nkind = \"craig_simon\"\npoints = 0\n", "empty");
    assert_eq!(code, 2);
    assert!(err.contains("points"));
    assert_eq!(cli("l1", "[run]\nbogus = 1\n", "bogus").0, 2);
    assert_eq!(cli("l1", "[run]\nseed = 1\n", "nococycle").0, 2);
    let status = Process::new(env!("CARGO_BIN_EXE_cocycle")).arg("l1").output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn perturbed_measure_fails_with_exit_one() {
    let (code, err, _) = cli("measure", "[cocycle]\npreset = \"rot07\"\n\n[run]\nperturb_first_weight = 1.5\n", "perturb");
    assert_eq!(code, 1);
    assert!(err.contains("FAIL stationarity"));
}

#[test]
fn l1_on_conformal_and_null_specs() {
    let (cfg, text) = load("conformal");
    let out = run_command(Command::L1, &cfg, &text).unwrap();
    assert_eq!(out.exit, 0);
    for e in out.report.result["estimates"].as_array().unwrap() {
        let v = e["value"].as_f64().unwrap();
        assert!((v - 0.5 * std::f64::consts::LN_2).abs() < 0.02, "{e}");
    }

    let (cfg, text) = load("null");
    let out = run_command(Command::L1, &cfg, &text).unwrap();
    for e in out.report.result["estimates"].as_array().unwrap() {
        assert_eq!(e["value"], "neg_inf");
        assert!(e["neg_inf_witness"].is_array());
    }
    assert!(out.csv.contains("series,neg_inf,"));
}

#[test]
fn depth_zero_flags_low_coverage() {
    let cfg = parse("[cocycle]\npreset = \"rot07\"\n\n[run]\ndepth = 0\nmethods = [\"series\"]\n");
    let out = run_command(Command::L1, &cfg, "").unwrap();
    assert!(out.report.warnings.iter().any(|w| w.contains("low coverage")));
    assert_eq!(out.report.result["estimates"][0]["profile"].as_array().unwrap().len(), 1);
}

#[test]
fn measure_examples() {
    let cfg = parse("[cocycle]\npreset = \"rot07\"\n\n[run]\ndepth = 20\n");
    let out = run_command(Command::Measure, &cfg, "").unwrap();
    assert_eq!(out.exit, 0);
    let covered = out.report.result["covered_mass"].as_f64().unwrap();
    assert!((covered - (1.0 - 0.7f64.powi(21))).abs() < 1e-12);

    let (cfg, text) = load("conformal");
    let out = run_command(Command::Measure, &cfg, &text).unwrap();
    assert_eq!(out.report.result["merged_atoms"], 1);
}

#[test]
fn huge_epsilon_ldt_has_zero_frequencies() {
    let cfg = parse("[cocycle]\npreset = \"conformal\"\n\n[run]\nepsilon = 100.0\nschedule = [50, 100]\nldt_samples = 200\n");
    let out = run_command(Command::Ldt, &cfg, "").unwrap();
    assert_eq!(out.exit, 0);
    for r in out.report.result["rows"].as_array().unwrap() {
        assert_eq!(r["count"], 0);
    }
}

#[test]
fn variance_reports_both_sources() {
    let (cfg, text) = load("conformal");
    let out = run_command(Command::Variance, &cfg, &text).unwrap();
    assert_eq!(out.exit, 0);
    let gl = out.report.result["gordin_livsic"]["sigma2"].as_f64().unwrap();
    assert!((gl - 0.25 * std::f64::consts::LN_2.powi(2)).abs() < 1e-9);
    assert!(out.report.result["relative_gap"].as_f64().unwrap() <= 0.15);
    assert!(out.csv.lines().any(|l| l.starts_with("empirical,")));
}

#[test]
fn conformal_clt_run() {
    let (cfg, text) = load("conformal");
    let out = run_command(Command::Clt, &cfg, &text).unwrap();
    assert_eq!(out.exit, 0);
    let s2 = out.report.result["sigma2"].as_f64().unwrap();
    assert!((s2 / (0.25 * std::f64::consts::LN_2.powi(2)) - 1.0).abs() < 0.1);
    assert!(out.report.result["clt"]["ks"].as_f64().unwrap() <= 0.05);
    assert!(out.csv.starts_with("sample,normalized_value\n"));
}

#[test]
fn scan_examples() {
    let (cfg, text) = load("craig_simon");
    let out = run_command(Command::Scan, &cfg, &text).unwrap();
    assert_eq!(out.exit, 0, "Craig–Simon winding failure is not gating");
    assert_eq!(out.report.result["structural_points"], serde_json::json!([-1.0, 0.0, 1.0]));
    let w = out.report.checks.iter().find(|c| c.name == "winding").unwrap();
    assert!(!w.pass && !w.gating);
    assert_eq!(out.report.result["winding"]["letter"], 2);

    let (cfg, text) = load("rotation");
    let out = run_command(Command::Scan, &cfg, &text).unwrap();
    assert_eq!(out.exit, 0);
    assert!(out.report.result["winding"]["c0_hat"].as_f64().unwrap() > 0.0);
}

#[test]
fn nullwords_and_diagnose() {
    let (cfg, text) = load("null");
    let out = run_command(Command::Nullwords, &cfg, &text).unwrap();
    assert!(out.csv.lines().nth(1).unwrap().starts_with("1-2-1,"));
    let (cfg, text) = load("rot07");
    let out = run_command(Command::Diagnose, &cfg, &text).unwrap();
    assert_eq!(out.exit, 0);
    assert!(out.csv.contains("arc_certificate,"));
}

#[test]
fn seed_override_is_echoed() {
    let (cfg, text) = load("rot07");
    let dir = scratch("seed");
    let cfg_path = configs().join("rot07.toml");
    let status = Process::new(env!("CARGO_BIN_EXE_cocycle"))
        .args(["l1", "--seed", "99", "--format", "json", "--label", "s", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(!dir.join("l1-s.csv").exists());
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(dir.join("l1-s.json")).unwrap()).unwrap();
    assert_eq!(report.seed, 99);
    assert_eq!(report.config.run.seed, Some(99));
    assert_eq!(report.config_text, text);
    assert_eq!(cfg.run.seed, Some(7));
}
