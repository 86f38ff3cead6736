use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_szego-lab"));
    c.env("SZEGO_LAB_THREADS", "2");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("szego-lab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn density_envelope_and_exit_zero() {
    let out = run(&["density", "--domain", "symmetrized_bidisc", "--n", "16", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["command"], "density");
    assert_eq!(v["seed"], 9);
    assert_eq!(v["result"]["grid"]["manifold_id"], "torus_2");
    assert!(v["result"]["max_deviation"].as_f64().unwrap() < 1e-10);
}

#[test]
fn divergent_scan_is_a_result_not_a_failure() {
    let out = run(&["ap-scan", "--weight", "thullen", "--m", "2", "--k", "2", "--p", "5.0", "--n", "32"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["scans"][0]["verdict"], "divergent");
}

#[test]
fn bad_parameters_exit_two() {
    assert_eq!(run(&["ap-scan", "--p", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["density", "--domain", "annulus"]).status.code(), Some(2));
    assert_eq!(run(&["density", "--config", "/nonexistent/x.ini"]).status.code(), Some(2));
}

#[test]
fn config_file_layers_under_flags() {
    let dir = scratch_dir("config");
    let cfg = dir.join("lab.ini");
    fs::write(&cfg, "[defaults]\nseed = 4\nn = 8\n[density]\ndomain = minimal_ball\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&run(&["--config", c, "density"]));
    assert_eq!(v["seed"], 4);
    assert_eq!(v["result"]["grid"]["manifold_id"], "sphere3");
    let v = json(&run(&["--config", c, "density", "--domain", "symmetrized_bidisc", "--seed", "1"]));
    assert_eq!(v["seed"], 1);
    assert_eq!(v["result"]["grid"]["resolutions"], serde_json::json!([8, 8]));
}

#[test]
fn out_dir_receives_json_and_csv() {
    let dir = scratch_dir("out");
    let out = run(&["--out", dir.to_str().unwrap(), "asymptotics", "--alpha", "0", "--deltas", "0.4,0.2"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.join("asymptotics.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("delta,ratio"));
    assert_eq!(csv.lines().count(), 4);
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join("asymptotics.json")).unwrap()).unwrap();
    assert_eq!(v["command"], "asymptotics");
}

#[test]
fn report_is_deterministic_for_a_seed() {
    let a = run(&["report", "--seed", "11"]);
    let b = run(&["report", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["passed"], true);
}

#[test]
fn project_reads_field_and_is_idempotent() {
    let dir = scratch_dir("project");
    let input = dir.join("f.json");
    // Constant field on the 8×8 grid: invariant and already holomorphic.
    let values: Vec<[f64; 2]> = vec![[1.5, -0.5]; 64];
    fs::write(&input, serde_json::json!({ "values": values }).to_string()).unwrap();
    let out = run(&["project", "--context", "product_power", "--m", "2", "--k", "2", "--n", "8", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["result"]["idempotence_residual"].as_f64().unwrap() < 1e-12);
    let first = &v["result"]["values"][0];
    assert!((first[0].as_f64().unwrap() - 1.5).abs() < 1e-12);

    fs::write(&input, serde_json::json!({ "values": [[1.0, 0.0]] }).to_string()).unwrap();
    let out = run(&["project", "--n", "8", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
