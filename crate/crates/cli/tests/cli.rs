use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn htexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htexp")).args(args).output().expect("spawn htexp")
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const NON_TACI: &str = r#"{"schema_version": "1", "alphabets": {"U": 2, "V": 2, "X": 2, "Y": 2},
    "p_uv": [[0.1, 0.4], [0.4, 0.1]], "q_uv": [[0.375, 0.125], [0.125, 0.375]],
    "channel": [[0.8, 0.2], [0.2, 0.8]], "tau": 1.0, "v_factorization": {"e": 2, "z": 1}}"#;

#[test]
fn uncoded_on_builtin_instance() {
    let v = json(&htexp(&["exponent", "uncoded", "builtin:example1"]));
    assert!((v["value_bits"].as_f64().unwrap() - 0.3244).abs() < 1e-3);
    assert_eq!(v["units"], "bits");
    assert_eq!(v["bound"], "scheme_value");
}

#[test]
fn units_only_rescale() {
    let b = json(&htexp(&["exponent", "onebit", "builtin:example1", "--units", "bits"]));
    let n = json(&htexp(&["exponent", "k1", "builtin:example1", "--units", "nats"]));
    let n1 = json(&htexp(&["exponent", "onebit", "builtin:example1", "--units", "nats"]));
    let ln2 = std::f64::consts::LN_2;
    for (k, vb) in b["terms"].as_object().unwrap() {
        let vn = n1["terms"][k].as_f64().unwrap();
        assert!((vb.as_f64().unwrap() * ln2 - vn).abs() < 1e-12, "{k}");
    }
    assert_eq!(n["value"], n["value_nats"]);
    assert_eq!(b["value_nats"], n1["value_nats"]);
}

#[test]
fn precondition_failures_exit_3() {
    let o = htexp(&["exponent", "zerocap", "builtin:example1"]);
    assert_eq!(o.status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", NON_TACI);
    let o = htexp(&["exponent", "taci", &p]);
    assert_eq!(o.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("(u=0, e=0, z=0)"), "{msg}");
    let o = htexp(&["exponent", "jhtcc", &write(dir.path(), "t.json", &NON_TACI.replace("\"tau\": 1.0", "\"tau\": 2.0"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn validation_failures_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let bad_row = NON_TACI.replace("[[0.8, 0.2], [0.2, 0.8]]", "[[0.8, 0.2], [0.3, 0.8]]");
    let o = htexp(&["exponent", "onebit", &write(dir.path(), "b.json", &bad_row), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 1"));
    assert!(!out.exists());
    let unknown = NON_TACI.replace("\"tau\"", "\"extra\": 1, \"tau\"");
    assert_eq!(htexp(&["exponent", "onebit", &write(dir.path(), "u.json", &unknown)]).status.code(), Some(2));
    let version = NON_TACI.replace("\"1\"", "\"2\"");
    assert_eq!(htexp(&["exponent", "onebit", &write(dir.path(), "v.json", &version)]).status.code(), Some(2));
    assert_eq!(htexp(&["simulate", "builtin:example1", "--eps", "0"]).status.code(), Some(2));
    assert_eq!(htexp(&["exponent", "shtcc", "builtin:example1", "--grid-step", "0"]).status.code(), Some(2));
    assert_eq!(htexp(&["exponent", "onebit", "missing.json"]).status.code(), Some(2));
}

#[test]
fn simulator_guard_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let skewed = NON_TACI.replace("[[0.375, 0.125], [0.125, 0.375]]", "[[0.3, 0.2], [0.15, 0.35]]");
    let p = write(dir.path(), "s.json", &skewed.replace("[[0.1, 0.4], [0.4, 0.1]]", "[[0.12, 0.38], [0.43, 0.07]]"));
    let o = htexp(&["simulate", &p, "--n", "2000", "--bin-width", "1e-9"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_reports_slope_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let v = json(&htexp(&["simulate", "builtin:example1", "--n", "50:500:50", "--csv", csv.to_str().unwrap()]));
    assert!(v["relative_gap"].as_f64().unwrap() <= 0.10);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,alpha,beta_lo,beta_hi,slope_nats"));
    assert_eq!(lines.count(), 10);
}

#[test]
fn monte_carlo_is_seeded() {
    let args = ["simulate", "builtin:example1", "--scheme", "uncoded", "--n", "20", "--trials", "1000", "--seed", "7"];
    let a = htexp(&args);
    assert_eq!(a.stdout, htexp(&args).stdout);
    let v = json(&a);
    assert_eq!(v["monte_carlo"][0]["status"], "ran");
    assert_eq!(v["seed"], 7);
    let other = htexp(&["simulate", "builtin:example1", "--scheme", "uncoded", "--n", "20", "--trials", "1000", "--seed", "8"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn channel_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.json", r#"{"schema_version": "1", "channel": [[0.8, 0.2], [0.2, 0.8]]}"#);
    let c = json(&htexp(&["channel", "capacity", &p]));
    assert!((c["value_bits"].as_f64().unwrap() - 0.2781).abs() < 1e-4);
    let e = json(&htexp(&["channel", "expurgated", &p, "--rate", "0", "--input-dist", "0.5,0.5"]));
    assert!((e["value_bits"].as_f64().unwrap() - 0.161).abs() < 1e-3);
    let flat = write(dir.path(), "f.json", r#"{"schema_version": "1", "channel": [[0.3, 0.7], [0.3, 0.7]]}"#);
    assert_eq!(json(&htexp(&["channel", "ec", &flat]))["value"], 0.0);
    let noiseless = write(dir.path(), "n.json", r#"{"schema_version": "1", "channel": [[1.0, 0.0], [0.0, 1.0]]}"#);
    assert_eq!(json(&htexp(&["channel", "ec", &noiseless]))["value"], "inf");
    assert_eq!(htexp(&["channel", "expurgated", &p, "--input-dist", "0.5"]).status.code(), Some(2));
}

#[test]
fn fig2_curve_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    assert!(htexp(&["repro", "fig2", "--out", out.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("r,f_prime_bits\n0.2,"));
    assert_eq!(text.lines().count(), 62);
    let (r, v) = text.lines().last().unwrap().split_once(',').unwrap();
    assert_eq!(r, "0.5");
    assert!((v.parse::<f64>().unwrap() + 0.5 * 0.8f64.log2()).abs() < 1e-6);
}
