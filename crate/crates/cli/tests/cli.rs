use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn chiral(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chiral")).args(args).output().unwrap()
}

fn in_dir(dir: &Path, args: &[&str]) -> Output {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", dir.to_str().unwrap()]);
    chiral(&full)
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let lines = data_lines(csv);
    let idx = lines[0].split(',').position(|h| h == name).unwrap();
    lines[1..]
        .iter()
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn simulate_header_lists_every_molecule() {
    let dir = tempfile::tempdir().unwrap();
    let out = in_dir(dir.path(), &["simulate", "--n-env", "2", "--t-final", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    assert_eq!(data_lines(&csv)[0], "t,Z,Phi,z_1,phi_1,z_2,phi_2,H_total");
    assert!(csv.contains("# convention: hamiltonian"));
    assert!(csv.lines().any(|l| l.starts_with("# config: {")));
    let h = column(&csv, "H_total");
    assert!(h.iter().all(|e| (e - h[0]).abs() < 1e-9));
}

#[test]
fn misspelled_key_is_named_with_exit_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[coupling]\nlamda = 1.0\n").unwrap();
    let out = chiral(&["--config", cfg.to_str().unwrap(), "ensemble"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lamda"));
}

#[test]
fn classical_pole_start_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = in_dir(dir.path(), &["simulate", "--formalism", "classical", "--t-final", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn single_realization_mean_is_the_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--n-env", "3", "--t-final", "2", "--seed", "5"];
    let mut sim = vec!["simulate"];
    sim.extend(args);
    assert!(in_dir(dir.path(), &sim).status.success());
    let mut ens = vec!["ensemble", "--n", "1"];
    ens.extend(args);
    assert!(in_dir(dir.path(), &ens).status.success());
    let z = column(&std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap(), "Z");
    let mean = column(&std::fs::read_to_string(dir.path().join("ensemble.csv")).unwrap(), "mean_Z");
    assert_eq!(z.len(), mean.len());
    for (a, b) in z.iter().zip(&mean) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn ensemble_summary_echoes_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let out = in_dir(
        dir.path(),
        &["ensemble", "--n", "8", "--n-env", "2", "--t-final", "1", "--seed", "77", "--convention", "paper"],
    );
    assert!(out.status.success());
    let summary: Value = serde_json::from_slice(&std::fs::read(dir.path().join("ensemble_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["master_seed"], 77);
    assert_eq!(summary["convention"], "paper");
    assert_eq!(summary["config"]["n_env"], 2);
    assert!(summary["time_avg_Z"].is_f64());
    assert!(summary["envelope_decay"].is_f64());
    assert!(summary["meta"][0].as_str().unwrap().starts_with("chiral "));
    assert!(dir.path().join("plot_ensemble.py").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[ensemble]\nseed = 1\nn_realizations = 4\n[integrator]\nt_final = 1.0\n[environment]\nn_env = 2\n").unwrap();
    let out = in_dir(dir.path(), &["--config", cfg.to_str().unwrap(), "ensemble", "--seed", "9"]);
    assert!(out.status.success());
    let summary: Value = serde_json::from_slice(&std::fs::read(dir.path().join("ensemble_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["master_seed"], 9);
    assert_eq!(summary["n_realizations"], 4);
}

#[test]
fn spectrum_without_coupling_is_isolated() {
    let out = chiral(&["spectrum", "--eps", "1", "--delta", "1", "--lambda", "0"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["lambda_plus"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-15);
    assert!((v["lambda_minus"].as_f64().unwrap() + 2f64.sqrt()).abs() < 1e-15);
    assert!((v["delta_e"].as_f64().unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn spectrum_scan_is_a_table() {
    let out = chiral(&["spectrum", "--env-z", "0.5,-0.1", "--scan-lambda", "0,2,5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let eps = column(&text, "epsilon_eff");
    assert_eq!(eps.len(), 5);
    assert!((eps[4] - 0.4).abs() < 1e-15);
}

#[test]
fn potential_table_matches_library() {
    let out = chiral(&["potential", "i-integral", "--r", "1.0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(data_lines(&text)[0], "r [1/m_e],I [dimensionless]");
    let value = column(&text, "I [dimensionless]")[0];
    assert_eq!(value, chiral_core::potentials::i_integral(1.0).unwrap());
}

#[test]
fn potential_rejects_bad_radius() {
    let out = chiral(&["potential", "axion", "--r", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = chiral(&["potential", "vacpol"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn weak_charge_of_carbon() {
    let out = chiral(&["potential", "weak-charge"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let expected = 6.0 * (1.0 - 4.0 * 0.23122) - 6.0;
    assert!((v["q_w"].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn classify_truly_chiral() {
    let out = chiral(&["classify", "--parity", "odd", "--time", "even"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["class"], "truly_chiral");
    assert_eq!(v["generates_pved"], true);
    let out = chiral(&["classify", "--interaction", "axion-exchange"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["class"], "falsely_chiral");
    assert_eq!(chiral(&["classify", "--parity", "odd"]).status.code(), Some(2));
}

#[test]
fn reproduction_verdict_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[coupling]\nlambda = 0.0\n").unwrap();
    let out = in_dir(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "reproduce-fig3", "--n", "4", "--n-env", "2", "--t-final", "1"],
    );
    assert_eq!(out.status.code(), Some(4));
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("fig3_report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"]["ordering_pass"], false);
}

#[test]
fn convergence_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = in_dir(dir.path(), &["convergence", "--n-list", "4,8", "--n-env", "2", "--t-final", "1"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(data_lines(&csv)[0], "n,time_avg_Z,std_error");
    assert_eq!(data_lines(&csv).len(), 3);
}

#[test]
fn fixed_seed_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["ensemble", "--n", "16", "--n-env", "3", "--t-final", "2", "--seed", "3"];
    assert!(in_dir(a.path(), &args).status.success());
    assert!(in_dir(b.path(), &args).status.success());
    for f in ["ensemble.csv", "ensemble_summary.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn help_exits_cleanly() {
    let out = chiral(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("reproduce-fig3"));
}
