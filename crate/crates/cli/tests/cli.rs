use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TOY: &str = r#"{"n": 1, "objective": {"n": 1, "terms": [{"exp": [1], "coef": 1.0}]},
 "G": {"m": 1, "entries": [[{"n": 1, "terms": [{"exp": [1], "coef": 2.0}, {"exp": [0], "coef": -1.0}]}]]},
 "domain": "binary"}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmi-sos"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn toy_dir() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("toy.json"), TOY).unwrap();
    d
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn error_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap()
}

/// Data rows of a CSV with a `#` metadata line and a header.
fn csv_rows(text: &str) -> Vec<HashMap<String, String>> {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# pmi-sos "));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(String::from)).collect())
        .collect()
}

#[test]
fn relax_exports_one_pair_per_order() {
    let d = toy_dir();
    let o = run(d.path(), &["relax", "--instance", "toy.json", "--r", "1..4", "--out", "out"]);
    let summary = stdout_json(&o);
    assert_eq!(summary["files"].as_array().unwrap().len(), 4);
    for r in 1..=4 {
        let base = d.path().join(format!("out/toy_proposed_binary_r{r}"));
        let dat = std::fs::read_to_string(base.with_extension("dat-s")).unwrap();
        assert!(dat.starts_with("* pmi-sos sdpa-sparse"));
        let meta: Value = serde_json::from_str(&std::fs::read_to_string(base.with_extension("json")).unwrap()).unwrap();
        assert_eq!(meta["relaxation"]["r"], r);
        let blocks: Vec<&str> = meta["relaxation"]["blocks"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| b["name"].as_str().unwrap())
            .collect();
        assert!(blocks.contains(&"moment"));
        assert!(blocks.contains(&"P_0"));
        assert_eq!(meta["meta"]["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(meta["meta"]["config_sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn relax_is_deterministic() {
    let d = toy_dir();
    for out in ["a", "b"] {
        let o = run(d.path(), &["relax", "--instance", "toy.json", "--r", "3", "--kind", "both", "--out", out]);
        assert!(o.status.success());
    }
    for f in ["toy_proposed_binary_r3.dat-s", "toy_holscherer_r3.dat-s"] {
        let a = std::fs::read(d.path().join("a").join(f)).unwrap();
        let b = std::fs::read(d.path().join("b").join(f)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn invalid_instance_exits_2() {
    let d = toy_dir();
    std::fs::write(d.path().join("bad.json"), "{not json").unwrap();
    let o = run(d.path(), &["relax", "--instance", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["code"], "INSTANCE_PARSE");
    let o = run(d.path(), &["solve", "--instance", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_mirrors_flags() {
    let d = toy_dir();
    std::fs::write(d.path().join("cfg.json"), r#"{"instance": ["toy.json"], "r": "3", "tol": 1e-9}"#).unwrap();
    let v = stdout_json(&run(d.path(), &["solve", "--config", "cfg.json", "--tol", "1e-7"]));
    assert_eq!(v["meta"]["config"]["tol"], 1e-7);
    assert_eq!(v["meta"]["provenance"]["tol"], "flag");
    assert_eq!(v["meta"]["provenance"]["r"], "config");

    std::fs::write(d.path().join("bad.json"), r#"{"instance": ["toy.json"], "tolerance": 1e-9}"#).unwrap();
    let o = run(d.path(), &["solve", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["code"], "CONFIG_PARSE");
}

#[test]
fn out_of_range_tol_is_bad_input() {
    let d = toy_dir();
    let o = run(d.path(), &["solve", "--instance", "toy.json", "--tol", "1e-2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_toy_bound_and_certificate() {
    let d = toy_dir();
    let v = stdout_json(&run(
        d.path(),
        &["solve", "--instance", "toy.json", "--r", "3", "--kind", "both", "--certify"],
    ));
    let results = v["results"].as_array().unwrap();
    let kinds: Vec<&str> = results.iter().map(|r| r["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["proposed_binary", "holscherer"]);
    for r in results {
        assert_eq!(r["status"], "optimal");
        let lb = r["lower_bound"].as_f64().unwrap();
        assert!(lb <= 1.0 + 1e-6 && lb >= 1.0 - 1e-6, "{lb}");
        let res = r["certificate"]["residual"].as_f64().unwrap();
        assert!(res <= 1e-5, "{res}");
    }
}

#[test]
fn oracle_toy() {
    let d = toy_dir();
    let v = stdout_json(&run(d.path(), &["oracle", "--instance", "toy.json", "--r", "3"]));
    assert_eq!(v["oracle"]["f_min"], 1.0);
    assert_eq!(v["oracle"]["argmin"], serde_json::json!([1.0]));
    assert_eq!(v["diagnostics"][0]["r"], 3);
}

#[test]
fn penalty_grid_and_sidecar() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &["penalty", "--lambda", "-0.5", "--n-height", "1", "--v", "40", "--out", "."],
    );
    let side = stdout_json(&o);
    let rows = csv_rows(&std::fs::read_to_string(d.path().join("penalty.csv")).unwrap());
    assert_eq!(rows.len(), 10_000);
    let max_err = rows.iter().map(|r| r["error"].parse::<f64>().unwrap()).fold(f64::NEG_INFINITY, f64::max);
    let min_err = rows.iter().map(|r| r["error"].parse::<f64>().unwrap()).fold(f64::INFINITY, f64::min);
    assert!(max_err <= side["jackson_bound"].as_f64().unwrap());
    assert!(min_err >= -1e-10);
    assert_eq!(side["spec"]["k"], pmi_sos_k(0.5, 40));
    assert_eq!(side["meta"]["provenance"]["k"], "computed");
}

fn pmi_sos_k(delta: f64, v: u32) -> u32 {
    pmi_sos::penalty::choose_k(delta, v).unwrap()
}

#[test]
fn penalty_rejects_bad_spec() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["penalty", "--lambda", "0.5", "--out", "."]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_default_suite() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["bench", "--out", "."]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&std::fs::read_to_string(d.path().join("bench.csv")).unwrap());
    assert_eq!(rows.len(), 60);
    let mut kron = HashMap::new();
    let mut trace = HashMap::new();
    for r in &rows {
        assert!(r["error"].is_empty(), "{r:?}");
        let gap: f64 = r["gap"].parse().unwrap();
        assert!(gap >= -1e-6, "{r:?}");
        if r["m"] != "1" {
            let key = (r["instance"].clone(), r["r"].clone());
            let size: usize = r["largest_localizing"].parse().unwrap();
            match r["kind"].as_str() {
                "holscherer" => kron.insert(key, size),
                _ => trace.insert(key, size),
            };
        }
    }
    assert!(!kron.is_empty());
    for (k, t) in &trace {
        assert!(t < &kron[k], "{k:?}");
    }
    let order: Vec<String> = rows.iter().map(|r| format!("{}/{}/{}", r["instance"], r["kind"], r["r"])).collect();
    assert_eq!(order[0], "rand2024/proposed_binary/2");
    assert_eq!(order[3], "rand2024/holscherer/2");
    assert_eq!(order[59], "rand2033/holscherer/4");
}
