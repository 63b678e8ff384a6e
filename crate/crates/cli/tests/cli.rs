use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_superbranch"));
    c.env_remove("SUPERBRANCH_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const PROP3_RECIPE: &str = r#"{
  "entries": [
    {"branching": {"kind": "power", "m": 2}, "probability": "1/10"},
    {"branching": {"kind": "reciprocal"}, "probability": "9/10"}
  ],
  "intensity_coeff": "5/2",
  "intensity_exponent": 2
}"#;

const MCKEAN_ONE: &str = r#"{
  "mode": "mckean",
  "boundary": {"family": "constant", "c": 1.0},
  "x": [0.0],
  "t": 1.0,
  "replicas": 500,
  "seed": 1
}"#;

#[test]
fn compile_prints_exact_recipe() {
    let o = run(&["compile", "--target", "-u^3", "--ansatz", "power2,reciprocal", "--rescaling", "type2-paper"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("{power2: 1/10, reciprocal: 9/10}, k = (5/2)·β^-2"), "{text}");
}

#[test]
fn psi_of_prop3_recipe() {
    let dir = TempDir::new().unwrap();
    let r = write(dir.path(), "prop3.json", PROP3_RECIPE);
    let o = run(&["psi", "--recipe", r.to_str().unwrap(), "--rescaling", "type2-paper"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "-u^3\n");
    let o = run(&["psi", "--recipe", r.to_str().unwrap(), "--rescaling", "type2-consistent"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn compile_output_feeds_psi() {
    let o = run(&["compile", "--target", "2*u^2 + ux^2", "--ansatz", "dshift+,dshift-,power2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let json = &text[text.find('\n').unwrap() + 1..];
    let dir = TempDir::new().unwrap();
    let r = write(dir.path(), "prop2.json", json);
    let o = run(&["psi", "--recipe", r.to_str().unwrap()]);
    assert_eq!(stdout(&o), "2*u^2 + ux^2\n");
}

#[test]
fn infeasible_target_is_a_config_error() {
    let o = run(&["compile", "--target", "-u^2", "--ansatz", "power0,power2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no recipe exists"));
}

#[test]
fn mckean_unit_datum() {
    let dir = TempDir::new().unwrap();
    let c = write(dir.path(), "c.json", MCKEAN_ONE);
    let out = dir.path().join("out");
    let o = run(&["run-mckean", "--config", c.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("estimates.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[6].parse::<f64>().unwrap(), 1.0);
    assert_eq!(row[7].parse::<f64>().unwrap(), 0.0);
    assert!(out.join("estimates.json").exists());
}

#[test]
fn unknown_key_and_wrong_mode_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", &MCKEAN_ONE.replace("\"seed\"", "\"colour\": 1, \"seed\""));
    assert_eq!(run(&["run-mckean", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let c = write(dir.path(), "c.json", MCKEAN_ONE);
    assert_eq!(run(&["run-super", "--config", c.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn population_cap_exit_3() {
    let dir = TempDir::new().unwrap();
    let text = MCKEAN_ONE
        .replace("\"seed\": 1", "\"seed\": 1, \"t\": 4.0, \"engine\": {\"population_cap\": 2}")
        .replace("\"t\": 1.0,", "");
    let c = write(dir.path(), "c.json", &text);
    assert_eq!(run(&["run-mckean", "--config", c.to_str().unwrap()]).status.code(), Some(3));
}

fn prop3_config(betas: &str) -> String {
    format!(
        r#"{{
  "mode": "super",
  "recipe": {PROP3_RECIPE},
  "rescaling": "type2-paper",
  "boundary": {{"family": "constant", "c": 0.2}},
  "x": [0.0], "t": 0.25, "betas": {betas}, "replicas": 400, "seed": 5,
  "oracle": {{"kind": "ode", "equation": "prop3"}}
}}"#
    )
}

#[test]
fn empty_beta_list_exit_2() {
    let dir = TempDir::new().unwrap();
    let c = write(dir.path(), "c.json", &prop3_config("[]"));
    assert_eq!(run(&["sweep", "--config", c.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn sweep_writes_summary() {
    let dir = TempDir::new().unwrap();
    let c = write(dir.path(), "c.json", &prop3_config("[0.4, 0.3]"));
    let out = dir.path().join("s");
    let o = run(&["sweep", "--config", c.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("sweep_summary.json")).unwrap()).unwrap();
    let oracle = summary["rows"][0]["extrapolated"]["u_oracle"].as_f64().unwrap();
    assert!((oracle - 0.2 / (1.0f64 - 0.02).sqrt()).abs() < 1e-10);
    assert!(summary["config_sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn workers_do_not_change_bytes() {
    let dir = TempDir::new().unwrap();
    let c = write(dir.path(), "c.json", &prop3_config("[0.4, 0.2]"));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (w, d) in [("1", &a), ("4", &b)] {
        let o = run(&["run-super", "--config", c.to_str().unwrap(), "--workers", w, "--out", d.to_str().unwrap()]);
        assert!(o.status.success());
    }
    for f in ["estimates.csv", "estimates.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let o =
        bin().env("SUPERBRANCH_WORKERS", "2").args(["run-super", "--config", c.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.stdout, fs::read(a.join("estimates.csv")).unwrap());
}

#[test]
fn compare_assert_and_hash_check() {
    let dir = TempDir::new().unwrap();
    let c = write(dir.path(), "c.json", &prop3_config("[0.4, 0.2]"));
    let d = dir.path().join("o");
    let cs = c.to_str().unwrap();
    let ds = d.to_str().unwrap();
    assert!(run(&["run-super", "--config", cs, "--out", ds]).status.success());
    assert!(run(&["oracle", "--config", cs, "--out", ds]).status.success());
    let mc = d.join("estimates.csv");
    let or = d.join("oracle.csv");
    let (m, r) = (mc.to_str().unwrap(), or.to_str().unwrap());
    let loose = run(&["compare", "--mc", m, "--oracle", r, "--abs-tol", "10", "--assert"]);
    assert!(loose.status.success(), "{}", stdout(&loose));
    let tight = run(&["compare", "--mc", m, "--oracle", r, "--z", "0", "--assert"]);
    assert_eq!(tight.status.code(), Some(4));
    assert!(run(&["compare", "--mc", m, "--oracle", r, "--z", "0"]).status.success());

    let e = dir.path().join("e");
    assert!(run(&["oracle", "--config", cs, "--seed", "6", "--out", e.to_str().unwrap()]).status.success());
    let other = e.join("oracle.csv");
    let o = run(&["compare", "--mc", m, "--oracle", other.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hash mismatch"));
}

#[test]
fn exist_check_gate() {
    let dir = TempDir::new().unwrap();
    let r = write(dir.path(), "prop3.json", PROP3_RECIPE);
    let rs = r.to_str().unwrap();
    let ok = run(&["exist-check", "--recipe", rs, "--boundary", r#"{"family":"cosine","a":0.2,"omega":0.5}"#]);
    assert!(stdout(&ok).contains("\"status\": \"admissible\""));
    let bad = run(&["exist-check", "--recipe", rs, "--boundary", r#"{"family":"cosine","a":0.2,"omega":1.5}"#]);
    assert!(stdout(&bad).contains("\"status\": \"inadmissible\""));
}
