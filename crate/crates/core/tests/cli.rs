use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn zefchan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zefchan"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok_json(dir: &Path, args: &[&str]) -> Value {
    let out = zefchan(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn put(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn fixtures() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    put(d, "bec.json", r#"{"name":"bec","inputs":2,"outputs":3,"rows":[[0.7,0.3,0],[0,0.3,0.7]],"output_labels":["0","e","1"]}"#);
    put(d, "bsc.json", r#"{"name":"bsc","inputs":2,"outputs":2,"rows":[[0.7,0.3],[0.3,0.7]]}"#);
    put(d, "id.json", r#"{"name":"id","inputs":2,"outputs":2,"rows":[[1,0],[0,1]]}"#);
    put(d, "z.json", r#"{"name":"z","inputs":2,"outputs":2,"rows":[[1,0],[0.4,0.6]]}"#);
    put(d, "bad.json", r#"{"name":"bad","inputs":2,"outputs":2,"rows":[[0.5,0.6],[0,1]]}"#);
    put(d, "pairs.json", r#"{"n":2,"messages":4,"codewords":[[0,0],[0,1],[1,0],[1,1]]}"#);
    put(d, "rep.json", r#"{"n":2,"messages":2,"codewords":[[0,0],[1,1]]}"#);
    put(d, "noisy.json", r#"{"mode":"noisy","forward":"bec.json","backward":"z.json","code":"pairs.json","gamma":1}"#);
    put(d, "noiseless.json", r#"{"mode":"noiseless","channel":"bec.json","code":"rep.json","gamma":"auto"}"#);
    dir
}

#[test]
fn analyze_reports() {
    let dir = fixtures();
    let d = dir.path();
    let bsc = ok_json(d, &["analyze", "bsc.json"]);
    assert_eq!(bsc["report"]["disprovers"], Value::Array(vec![]));
    assert_eq!(bsc["report"]["has_nonconfusable_pair"], false);
    assert!(bsc["report"]["decomposable_on_support"].is_null());
    assert!(bsc["report"]["witness_cycle"].is_object());

    let bec = ok_json(d, &["analyze", "bec.json"]);
    assert!(!bec["report"]["disprovers"].as_array().unwrap().is_empty());
    assert!(bec["report"]["decomposable_on_support"].is_object());
    assert!((bec["capacity"]["capacity_bits"].as_f64().unwrap() - 0.7).abs() < 1e-9);

    let id = ok_json(d, &["analyze", "id.json"]);
    assert_eq!(id["report"]["has_nonconfusable_pair"], true);

    let out = zefchan(d, &["analyze", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sum"));
    assert_eq!(zefchan(d, &["analyze", "missing.json"]).status.code(), Some(2));
}

#[test]
fn capacity_command() {
    let dir = fixtures();
    let c = ok_json(dir.path(), &["capacity", "bsc.json", "--tol", "1e-10"]);
    let h = -(0.3f64 * 0.3f64.log2() + 0.7 * 0.7f64.log2());
    assert!((c["capacity_bits"].as_f64().unwrap() - (1.0 - h)).abs() < 1e-9);
}

#[test]
fn code_build_and_eval() {
    let dir = fixtures();
    let d = dir.path();
    let q = ok_json(d, &["code", "build", "--channel", "bec.json", "-n", "3", "-M", "2", "--strategy", "exhaustive", "-o", "c3.json"]);
    // Best two-word code of length 3 on a BEC: complementary words, λ = ε³.
    for l in q["quality"]["lambda"].as_array().unwrap() {
        assert!((l.as_f64().unwrap() - 0.027).abs() < 1e-12);
    }
    let code: Value = serde_json::from_slice(&std::fs::read(d.join("c3.json")).unwrap()).unwrap();
    assert_eq!(code["messages"], 2);

    let exact = ok_json(d, &["code", "eval", "--channel", "bec.json", "--code", "c3.json", "--exact"]);
    assert_eq!(exact["quality"]["lambda"], q["quality"]["lambda"]);
    assert_eq!(exact["code_hash"], q["code_hash"]);
    let mc = ok_json(d, &["code", "eval", "--channel", "bec.json", "--code", "c3.json", "--mc", "100000", "--seed", "4"]);
    assert_eq!(mc["quality"]["method"]["kind"], "monte_carlo");
    let l = mc["quality"]["lambda"][0].as_f64().unwrap();
    assert!((l - 0.027).abs() < 3.0 * (0.027f64 * 0.973 / 1e5).sqrt());

    let out = zefchan(d, &["code", "build", "--channel", "bsc.json", "-n", "2", "-M", "2", "--strategy", "exhaustive", "-o", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn predict_from_config_or_parts() {
    let dir = fixtures();
    let d = dir.path();
    let a = ok_json(d, &["predict", "--config", "noisy.json"]);
    let b = ok_json(d, &["predict", "--channel", "bec.json", "--code", "pairs.json", "--backward", "z.json", "--gamma", "1"]);
    assert_eq!(a, b);
    // λ = 1 − 0.7², W_b(y'_c|x'_c) = 0.6.
    let p = a["prediction"]["p"][0].as_f64().unwrap();
    assert!((p - 0.49 * 0.6).abs() < 1e-12);
    assert!((a["prediction"]["n_bar"].as_f64().unwrap() - 3.0 / p).abs() < 1e-9);

    let c = ok_json(d, &["predict", "--config", "noiseless.json"]);
    assert_eq!(c["provenance"]["mode"], "noiseless");
    assert_eq!(c["provenance"]["gamma"], 1);
    assert_eq!(zefchan(d, &["predict", "--channel", "bec.json"]).status.code(), Some(2));
}

#[test]
fn simulate_then_report() {
    let dir = fixtures();
    let d = dir.path();
    assert!(zefchan(d, &["predict", "--config", "noisy.json", "-o", "pred.json"]).status.success());
    let out = zefchan(d, &["simulate", "--config", "noisy.json", "--messages", "100000", "--seed", "3", "-o", "stats.json", "--csv", "stats.csv"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(d.join("stats.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("msg_index,payload,rounds,delay_uses,committed_ok"));
    assert_eq!(csv.lines().count(), 100_001);

    let out = zefchan(d, &["report", "--stats", "stats.json", "--prediction", "pred.json", "--json", "bundle.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.starts_with("quantity,predicted,empirical,delta,pass\n"));
    for q in ["mean_rounds", "rate", "mean_delay", "undetected_errors"] {
        assert!(table.lines().any(|l| l.starts_with(&format!("{q},")) && l.ends_with(",true")), "{table}");
    }
    let bundle: Value = serde_json::from_slice(&std::fs::read(d.join("bundle.json")).unwrap()).unwrap();
    assert_eq!(bundle["all_pass"], true);

    // Prediction for a different code.
    assert!(zefchan(d, &["predict", "--config", "noiseless.json", "-o", "other.json"]).status.success());
    let out = zefchan(d, &["report", "--stats", "stats.json", "--prediction", "other.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible"));

    assert!(zefchan(d, &["simulate", "--config", "noisy.json", "--messages", "0", "--seed", "3", "-o", "empty.json"]).status.success());
    let out = zefchan(d, &["report", "--stats", "empty.json", "--prediction", "pred.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_fails_on_wrong_statistics() {
    let dir = fixtures();
    let d = dir.path();
    assert!(zefchan(d, &["predict", "--config", "noisy.json", "-o", "pred.json"]).status.success());
    assert!(zefchan(d, &["simulate", "--config", "noisy.json", "--messages", "20000", "--seed", "3", "-o", "stats.json"]).status.success());
    // Double every round count: same provenance, wrong numbers.
    let mut stats: Value = serde_json::from_slice(&std::fs::read(d.join("stats.json")).unwrap()).unwrap();
    let mean = stats["mean_rounds"].as_f64().unwrap();
    stats["mean_rounds"] = (2.0 * mean).into();
    std::fs::write(d.join("bad_stats.json"), stats.to_string()).unwrap();
    let out = zefchan(d, &["report", "--stats", "bad_stats.json", "--prediction", "pred.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean_rounds,"));
}

#[test]
fn transcript_respects_state_bit_safety() {
    let dir = fixtures();
    let d = dir.path();
    let out = zefchan(d, &["simulate", "--config", "noisy.json", "--messages", "2000", "--seed", "8", "-o", "s.json", "--transcript", "t.jsonl"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(d.join("t.jsonl")).unwrap();
    let (mut committed, mut acked) = (0u64, 0u64);
    for line in text.lines() {
        let r: Value = serde_json::from_str(line).unwrap();
        committed += r["rx_committed"].as_bool().unwrap() as u64;
        acked += r["tx_progressed"].as_bool().unwrap() as u64;
        let differ = r["tx_state_bit"] != r["rx_state_bit"];
        assert_eq!(differ, committed == acked + 1);
        assert!(committed == acked || committed == acked + 1);
    }
    assert_eq!(acked, 2000);
}

#[test]
fn verify_command() {
    let dir = fixtures();
    let d = dir.path();
    let v = ok_json(d, &["verify", "--config", "noisy.json", "--max-rounds", "3"]);
    assert_eq!(v["safe"], true);
    assert_eq!(v["report"]["violation_count"], 0);
    assert_eq!(zefchan(d, &["verify", "--config", "noiseless.json", "--max-rounds", "3"]).status.code(), Some(2));
    let out = zefchan(d, &["verify", "--config", "noisy.json", "--max-rounds", "9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn outputs_have_sorted_keys() {
    let dir = fixtures();
    let out = zefchan(dir.path(), &["predict", "--config", "noisy.json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let keys: Vec<usize> = ["\"p_indicator\"", "\"prediction\"", "\"provenance\"", "\"quality\""]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}
