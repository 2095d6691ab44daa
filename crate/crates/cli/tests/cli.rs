use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn rrg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrg")).args(args).env_remove("RRG_SEED").output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn sampling_is_deterministic() {
    let a = rrg(&["sample", "--n", "8", "--d", "3", "--trials", "10", "--seed", "1"]);
    let b = rrg(&["sample", "--n", "8", "--d", "3", "--trials", "10", "--seed", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let graphs: Vec<&str> = text.split("\n\n").collect();
    assert_eq!(graphs.len(), 10);
    assert!(graphs.iter().all(|g| g.starts_with("8 12\n")));
    let c = rrg(&["sample", "--n", "8", "--d", "3", "--trials", "10", "--seed", "2"]);
    assert_ne!(c.stdout, text.as_bytes());
}

#[test]
fn seed_from_environment() {
    let run = |env: Option<&str>, args: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rrg"));
        cmd.args(["sample", "--n", "10", "--measure", "mu2+nu1", "--trials", "3"]).args(args).env_remove("RRG_SEED");
        if let Some(s) = env {
            cmd.env("RRG_SEED", s);
        }
        cmd.output().unwrap().stdout
    };
    assert_eq!(run(Some("5"), &[]), run(None, &["--seed", "5"]));
    assert_ne!(run(Some("5"), &[]), run(None, &[]));
}

#[test]
fn worker_count_does_not_change_output() {
    let a = rrg(&["sample", "--n", "12", "--d", "4", "--trials", "50", "--workers", "1"]);
    let b = rrg(&["sample", "--n", "12", "--d", "4", "--trials", "50", "--workers", "3"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn counts_of_k4_from_file_and_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k4.graph");
    let k4 = "4 6\n1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n";
    std::fs::write(&path, k4).unwrap();
    let r = json(&rrg(&["count", "--input", path.to_str().unwrap()]));
    assert_eq!(r["result"], serde_json::json!({ "pm": 3, "triangles": 4, "ordered_1f": 6 }));

    let mut child = Command::new(env!("CARGO_BIN_EXE_rrg"))
        .args(["count", "--input", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"4 2\n1 2\n3 4\n").unwrap();
    let r = json(&child.wait_with_output().unwrap());
    assert_eq!(r["result"]["pm"], 1);
    assert_eq!(r["result"]["ordered_1f"], 1);

    std::fs::write(&path, "4 3\n1 2\n2 3\n3 4\n").unwrap();
    let r = json(&rrg(&["count", "--input", path.to_str().unwrap()]));
    assert!(r["result"]["ordered_1f"].is_null());
}

#[test]
fn reports_embed_config_and_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = rrg(&["couple", "inclusion", "--n", "8", "--d1", "3", "--d2", "5", "--trials", "10000", "--seed", "7", "--output", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let r: Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(r["config"]["command"], "couple inclusion");
    assert_eq!(r["config"]["master_seed"], 7);
    assert_eq!(r["config"]["params"]["d2"], 5);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    let res = &r["result"];
    assert_eq!(res["carrier_tv"], "134/11523");
    let (rate, se) = (res["inclusion_rate"].as_f64().unwrap(), res["inclusion_se"].as_f64().unwrap());
    assert!(rate >= 1.0 - 134.0 / 11523.0 - 3.0 * se);
}

#[test]
fn exact_distance_and_maximal_coupling() {
    let r = json(&rrg(&["tv", "--n", "8", "--p", "mu2+mu1", "--q", "mu3"]));
    assert_eq!(r["result"]["tv"], "2720/38157");
    let r = json(&rrg(&["couple", "maximal", "--n", "6", "--p", "mu2", "--q", "nu2", "--trials", "20000"]));
    let tv: Vec<f64> = r["result"]["tv"].as_str().unwrap().split('/').map(|x| x.parse().unwrap()).collect();
    let diag = r["result"]["diagonal_mass_f64"].as_f64().unwrap();
    assert!((diag - (1.0 - tv[0] / tv[1])).abs() < 1e-12);
    let rate = r["result"]["agreement_rate"].as_f64().unwrap();
    assert!((rate - diag).abs() < 4.0 * (diag * (1.0 - diag) / 20000.0).sqrt());
}

#[test]
fn coupling_subcommands_run() {
    let r = json(&rrg(&["couple", "zeta", "--n", "8", "--d", "3", "--epsilon", "0.1"]));
    let products = r["result"]["products"].as_array().unwrap();
    assert!(products.windows(2).all(|w| w[1].as_f64() <= w[0].as_f64()));
    assert!(r["result"]["product"].as_f64().unwrap() <= 0.1);

    let r = json(&rrg(&["couple", "strassen", "--instances", "3"]));
    assert!(r["result"]["max_violation"].as_f64().unwrap() <= 0.3112);

    let r = json(&rrg(&["couple", "extend", "--n", "4", "--d", "2"]));
    assert_eq!(r["result"]["tv"], "0");

    let r = json(&rrg(&["couple", "asp", "--n", "6", "--d", "1", "--k", "2", "--trials", "1000"]));
    assert_eq!(r["result"]["tv_eta_nu"], "0");

    let r = json(&rrg(&["couple", "complete", "--n", "4", "--d", "3", "--epsilon", "0.5", "--trials", "10"]));
    assert_eq!(r["result"]["inclusion_rate"], 1.0);
}

#[test]
fn experiment_sweeps_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let r = json(&rrg(&["experiment", "moments", "--n", "8,10", "--d", "3", "--trials", "2000", "--csv", csv.to_str().unwrap()]));
    assert_eq!(r["result"].as_array().unwrap().len(), 2);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("n,d,trials,x_mean"));
    assert!(lines[1].starts_with("8,3,2000,") && lines[2].starts_with("10,3,2000,"));

    let csv = dir.path().join("t.csv");
    json(&rrg(&["experiment", "tails", "--n", "12", "--d", "3,4", "--trials", "2000", "--pilot", "200", "--csv", csv.to_str().unwrap()]));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 3);

    let r = json(&rrg(&["experiment", "projection", "--n", "12", "--d", "3", "--trials", "2000"]));
    assert!(r["result"][0]["residual_ratio"].as_f64().unwrap() <= 1.0);
}

#[test]
fn exit_codes() {
    let out = rrg(&["sample", "--n", "7", "--d", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parity"));
    assert_eq!(rrg(&["tv", "--n", "8", "--p", "xi3", "--q", "mu3"]).status.code(), Some(2));
    assert_eq!(rrg(&["sample", "--bogus"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let caps = dir.path().join("caps.json");
    // about half the pairings of a 2-regular configuration are simple, so
    // three attempts per draw run out within 200 draws
    std::fs::write(&caps, r#"{"rejection_budget": 3}"#).unwrap();
    let out = rrg(&["sample", "--n", "40", "--d", "2", "--trials", "200", "--caps", caps.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(&caps, r#"{"rejection_budget": 1}"#).unwrap();
    let out = rrg(&["sample", "--n", "40", "--d", "6", "--caps", caps.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&caps, r#"{"no_such_cap": 1}"#).unwrap();
    assert_eq!(rrg(&["sample", "--n", "8", "--d", "3", "--caps", caps.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn suite_selection_and_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("suite.json");
    let out = rrg(&["suite", "acceptance", "--only", "overlay,zeta", "--output", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let names: Vec<&str> = r["result"]["outcomes"].as_array().unwrap().iter().map(|o| o["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["overlay", "zeta"]);
    assert_eq!(r["result"]["passed"], true);

    assert_eq!(rrg(&["suite", "acceptance", "--only", "nonsense"]).status.code(), Some(2));
    // the triangle criterion misses its large-n target at n = 24
    let out = rrg(&["suite", "acceptance", "--only", "triangles"]);
    assert_eq!(out.status.code(), Some(1));
}
