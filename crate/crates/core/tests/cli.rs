use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const RADIAL: &str = r#"
[grid]
N = 3
k = 3
r_max = 10.0
n_r = 64

[potential]
power_alpha = 1.0
power_coeff = 1.0

[nonlinearity]
Omega = 1.0
p = 3

[solve]
rho = 2
"#;

const HYDROGEN: &str = r#"
[grid]
N = 3
k = 2
r_max = 4.0
z_max = 4.0
n_r = 96
n_z = 96

[potential]
vortex_ell = 1
coulomb = true
shift_Omega_V = 1.5

[nonlinearity]
Omega = 0.0
p = 2.5

[solve]
recenter_every = 20

[analysis]
s0 = 30.0
R_list = [1.0]
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cylnls"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn solve_writes_result_with_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RADIAL);
    let out = run(&["solve"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("result.json"));
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["converged", "energy", "iters", "lambda", "residual", "rho"]);
    let mut ekeys: Vec<&str> = v["energy"].as_object().unwrap().keys().map(String::as_str).collect();
    ekeys.sort();
    assert_eq!(ekeys, ["kinetic", "nonlinear", "potential", "total"]);
    assert_eq!(v["converged"], Value::Bool(true));
    assert!(v["residual"].as_f64().unwrap() <= 1e-6 * 2.0);
    // stdout carries the same document
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, v);

    let field = fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert_eq!(field.lines().next(), Some("r,u"));
    assert!(field.lines().skip(1).all(|l| l.split(',').count() == 2));
    assert_eq!(field.lines().count(), 65);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("iter,J,residual,dt"));
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RADIAL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(run(&["solve", "--seed", "9"], &cfg, d).status.code(), Some(0));
    }
    for name in ["result.json", "field.csv", "trace.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    // syntax error
    let cfg = write_config(dir.path(), "[grid\nN = 3");
    assert_eq!(run(&["solve"], &cfg, dir.path()).status.code(), Some(3));
    // unknown subcommand
    assert_eq!(run(&["frobnicate"], &cfg, dir.path()).status.code(), Some(3));
    // failed positivity gate
    let cfg = write_config(dir.path(), &HYDROGEN.replace("shift_Omega_V = 1.5", "shift_Omega_V = 0.9"));
    let out = run(&["hydrogen"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Omega > 1"));
    // supercritical growth
    let cfg = write_config(dir.path(), &RADIAL.replace("p = 3", "p = 3\ngamma = 4"));
    let out = run(&["solve"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonlinearity.gamma"));
    // iteration budget exhausted
    let cfg = write_config(dir.path(), &RADIAL.replace("rho = 2", "rho = 2\nmax_iters = 2"));
    assert_eq!(run(&["solve"], &cfg, dir.path()).status.code(), Some(1));
}

#[test]
fn already_converged_start_leaves_header_only_trace() {
    // a single radial cell: every field is an eigenfunction
    let text = RADIAL.replace("n_r = 64", "n_r = 1").replace("r_max = 10.0", "r_max = 0.2");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &text);
    assert_eq!(run(&["solve"], &cfg, dir.path()).status.code(), Some(0));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.trim_end(), "iter,J,residual,dt");
}

#[test]
fn scan_sub_flags_unconverged_rows() {
    let text = format!("{}\n[analysis]\nmus = [0.8, 1.2]\n", RADIAL.replace("rho = 2", "rho = 2\nmax_iters = 3"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &text);
    let out = run(&["scan-sub"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let rep = read_json(&dir.path().join("scan.json"));
    let rows = rep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["converged"] == Value::Bool(false)));
    let csv = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",false")));
}

#[test]
fn scan_sub_succeeds_when_all_rows_converge() {
    let text = format!("{RADIAL}\n[analysis]\nmus = [0.8, 1.2]\n");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &text);
    assert_eq!(run(&["scan-sub"], &cfg, dir.path()).status.code(), Some(0));
    let rep = read_json(&dir.path().join("scan.json"));
    assert_eq!(rep["all_strict"], Value::Bool(true));
}

#[test]
fn check_hyp_reports_nonnegative_hydrogen_potential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HYDROGEN);
    assert_eq!(run(&["check-hyp"], &cfg, dir.path()).status.code(), Some(0));
    let rep = read_json(&dir.path().join("hypotheses.json"));
    assert!(rep["potential_min"].as_f64().unwrap() >= 0.0);
    assert!(rep["nonlinearity"].is_object());
}

#[test]
fn certify_writes_witness_or_reports_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HYDROGEN);
    assert_eq!(run(&["certify"], &cfg, dir.path()).status.code(), Some(0));
    let c = read_json(&dir.path().join("certificate.json"));
    assert!(c["energy"]["total"].as_f64().unwrap() < 0.0);
    let witness = fs::read_to_string(dir.path().join("witness.csv")).unwrap();
    assert_eq!(witness.lines().next(), Some("r,z,u"));

    let cfg = write_config(dir.path(), &HYDROGEN.replace("s0 = 30.0", "s0 = 2.0"));
    assert_eq!(run(&["certify"], &cfg, &dir.path().join("none")).status.code(), Some(1));
}

#[test]
fn probe_bl_writes_defects() {
    let text = r#"
[grid]
N = 3
k = 2
r_max = 2.0
z_max = 6.0
n_r = 32
n_z = 192

[nonlinearity]
Omega = 1.0
p = 3

[analysis]
separations = [0.0, 4.0]
bump_r_width = 1.0
bump_z_center = -3.0
bump_z_half_width = 1.0
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), text);
    assert_eq!(run(&["probe-bl"], &cfg, dir.path()).status.code(), Some(0));
    let rep = read_json(&dir.path().join("probe_bl.json"));
    let rows = rep["rows"].as_array().unwrap();
    assert!(rows[0]["defect"].as_f64().unwrap() > 0.0);
    assert!(rows[1]["defect"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn hydrogen_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HYDROGEN);
    let out = run(&["hydrogen"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let h = read_json(&dir.path().join("hydrogen.json"));
    assert_eq!(h["rho_source"], "certify");
    assert_eq!(h["energy_negative"], Value::Bool(true));
    assert!(h["potential_min"].as_f64().unwrap() >= 0.0);
    let r = read_json(&dir.path().join("result.json"));
    let rho = h["rho"].as_f64().unwrap();
    assert!(r["residual"].as_f64().unwrap() <= 1e-6 * rho);
}
