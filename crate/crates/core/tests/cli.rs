use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shor-mps")).args(args).env("SHOR_MPS_THREADS", "1").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Drops every `durations_s` object so reports can be compared byte for byte.
fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("durations_s");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[test]
fn sample_writes_requested_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = bin(&["sample", "--n", "21", "--a", "2", "--samples", "100", "--layout", "dynamic", "--seed", "42", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["records"].as_array().unwrap().len(), 100);
    assert_eq!(v["aggregate"]["samples"], 100);
    assert!(v["aggregate"]["tvd"].as_f64().unwrap() < 0.5);
    assert!(v["peak_elements"]["dynamic"]["modexp"].as_u64().unwrap() > 0);
}

#[test]
fn base_is_drawn_and_echoed() {
    let out = bin(&["sample", "--n", "21", "--samples", "3", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let a = v["instance"]["a"].as_u64().unwrap();
    assert!(a > 1 && a < 21 && a % 3 != 0 && a % 7 != 0);
    assert_eq!(v["instance"]["a_drawn"], true);
}

#[test]
fn period_four_comb() {
    let out = bin(&["sample", "--n", "15", "--a", "7", "--samples", "200", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for (s, _) in v["aggregate"]["s_histogram"].as_object().unwrap() {
        assert_eq!(s.parse::<u64>().unwrap() % 64, 0, "s = {s}");
    }
}

#[test]
fn verification_data_with_known_factors() {
    let out = bin(&["sample", "--n", "1943", "--a", "2", "--samples", "1", "--p", "29", "--q", "67", "--max-elements", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let out = bin(&["sample", "--n", "21", "--a", "2", "--p", "3", "--q", "7"]);
    let v = json(&out);
    assert_eq!(v["order_profile"]["r"], 6);
    assert_eq!(v["order_profile"]["lambda_n"], 6);
    assert_eq!(v["alpha_statistics"]["alpha_max"], 1);
    let out = bin(&["sample", "--n", "21", "--a", "2", "--p", "3", "--q", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["sample", "--n", "22", "--a", "3"]).status.code(), Some(2));
    assert_eq!(bin(&["sample", "--n", "25", "--a", "2"]).status.code(), Some(2));
    assert_eq!(bin(&["sample", "--n", "23", "--a", "2"]).status.code(), Some(2));
    assert_eq!(bin(&["sample", "--n", "21", "--a", "7"]).status.code(), Some(2));
    assert_eq!(bin(&["sample", "--n", "21", "--a", "2", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(bin(&["sample", "--n", "21", "--a", "2", "--max-elements", "10"]).status.code(), Some(3));
    assert_eq!(bin(&["sample", "--n", "21", "--a", "2", "--layout", "diagonal"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["sample", "--n", "21", "--a", "2", "--out", "/nonexistent/dir/r.json"]).status.code(), Some(2));
}

#[test]
fn memory_limit_with_retries_draws_new_bases() {
    // every base of 21 needs the same few hundred units, so retries cannot help
    let out = bin(&["sample", "--n", "21", "--a", "2", "--max-elements", "60", "--retries", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("element limit"));
}

#[test]
fn published_parameters_pass() {
    let out = bin(&["verify-paper"]);
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.matches("PASS").count(), 7);
    assert!(table.contains("961307"));
}

#[test]
fn profile_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let out = bin(&["profile", "--n", "21", "--a", "2", "--layout", "dynamic", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("stage,bond,rank,layout\n"));
    let v = json(&out);
    let p = &v["profiles"][0];
    assert_eq!(p["alpha_hat"], 1);
    // bond between the last B qubit and R, just left of R
    let labels = p["profiles"][0]["layout"].as_array().unwrap();
    let r_pos = labels.iter().position(|l| l == "lower").unwrap();
    assert_eq!(p["profiles"][0]["ranks"][r_pos - 1], 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("peak elements"));
}

#[test]
fn oracle_outputs() {
    let out = bin(&["oracle", "--l", "5", "--n", "21", "--a", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let p: Vec<f64> = v["distribution"]["probabilities"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((p[0] - 171.0 / 1024.0).abs() < 1e-15);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    // 17 significant digits on every float
    let raw = String::from_utf8(out.stdout).unwrap();
    assert!(raw.contains("1.6699218750000000e-1"));

    let out = bin(&["oracle", "--l", "4", "--r", "4", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,probability"));
    let peaks = lines.filter(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() > 0.2).count();
    assert_eq!(peaks, 4);
    assert_eq!(bin(&["oracle", "--r", "4"]).status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let args = ["sample", "--n", "21", "--a", "2", "--samples", "100", "--seed", "7"];
    let mut a = json(&bin(&args));
    let mut b = json(&bin(&args));
    strip_timing(&mut a);
    strip_timing(&mut b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
