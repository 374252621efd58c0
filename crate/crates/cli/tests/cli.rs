use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cayley(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cayley"))
        .args(args)
        .current_dir(dir)
        .env_remove("CAYLEY_PRECISION_BITS")
        .output()
        .expect("spawn cayley")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Two Haar gates on two qubits.
fn circuit(dir: &TempDir) -> String {
    let o = cayley(dir.path(), &["haar-sample", "--N", "4", "--count", "2", "--seed", "7", "--out", "c.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    "c.json".into()
}

#[test]
fn haar_sample_is_deterministic() {
    let dir = TempDir::new().unwrap();
    cayley(dir.path(), &["haar-sample", "--N", "2", "--count", "3", "--seed", "5", "--out", "a.json"]);
    cayley(dir.path(), &["haar-sample", "--N", "2", "--count", "3", "--seed", "5", "--out", "b.json"]);
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    assert!(dir.path().join("a.json.manifest.json").exists());
}

#[test]
fn unsupported_dimension_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = cayley(dir.path(), &["haar-sample", "--N", "3", "--out", "x.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("2 or 4"));
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn reference_reduction_decodes() {
    let dir = TempDir::new().unwrap();
    let c = circuit(&dir);
    let o = cayley(dir.path(), &["reduce", &c, "--out", "r.json", "--samples-out", "s.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["decode_status"], "decoded");
    assert!(r["abs_error"].as_f64().unwrap() < 1e-20);
    assert_eq!(r["backend"], "mpfr-512");
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);

    // Same seed, same bytes.
    cayley(dir.path(), &["reduce", &c, "--out", "r2.json"]);
    assert_eq!(std::fs::read(dir.path().join("r.json")).unwrap(), std::fs::read(dir.path().join("r2.json")).unwrap());
}

#[test]
fn precision_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let c = circuit(&dir);
    let o = Command::new(env!("CARGO_BIN_EXE_cayley"))
        .args(["reduce", &c])
        .current_dir(dir.path())
        .env("CAYLEY_PRECISION_BITS", "256")
        .output()
        .unwrap();
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["backend"], "mpfr-256");
    let bad = cayley(dir.path(), &["reduce", &c, "--precision-bits", "300"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn l_at_the_bound_is_refused() {
    let dir = TempDir::new().unwrap();
    let c = circuit(&dir);
    let o = cayley(dir.path(), &["reduce", &c, "--L", "20", "--t", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("L > k1 + k2 + 2t"), "{}", stderr(&o));
    let ok = cayley(dir.path(), &["reduce", &c, "--L", "40", "--t", "2"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
}

#[test]
fn heavy_corruption_exits_with_decode_failure() {
    let dir = TempDir::new().unwrap();
    let c = circuit(&dir);
    let o = cayley(
        dir.path(),
        &["reduce", &c, "--L", "60", "--t", "2", "--model", "corrupt", "--frac", "0.4", "--out", "r.json"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["decode_status"], "decode_failed");
    assert!(r["estimated_p0_at_0"].is_null());
}

#[test]
fn paturi_bound_at_degree_zero_is_eps() {
    let dir = TempDir::new().unwrap();
    let o = cayley(dir.path(), &["bounds", "--d", "0", "--eps", "1e-3"]);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["paturi"]["value"].as_f64().unwrap(), 1e-3);
    assert!(r["note"].as_str().unwrap().contains("o(1)"));
}

#[test]
fn zeroth_order_truncation_stays_unitary() {
    let dir = TempDir::new().unwrap();
    let c = circuit(&dir);
    let o = cayley(dir.path(), &["truncate", &c, "--K", "0", "--thetas", "0.2,0.7,1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "max_gate_residual").unwrap();
    let rows: Vec<String> = lines.map(str::to_owned).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(row.split(',').nth(col).unwrap().parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn malformed_gate_is_named() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"n": 1, "gates": [{"qubits": [0], "haar_seed": 1}, {"qubits": [0], "unitary": [[[1, 0]]]}]}"#,
    )
    .unwrap();
    let o = cayley(dir.path(), &["path-check", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gate 1"), "{}", stderr(&o));

    std::fs::write(dir.path().join("broken.json"), "{\"n\": 1,\n \"gates\": [").unwrap();
    let o = cayley(dir.path(), &["path-check", "broken.json"]);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn tvd_writes_one_row_per_delta() {
    let dir = TempDir::new().unwrap();
    let o = cayley(dir.path(), &["tvd", "--N", "2", "--deltas", "0.1,0.05,0.01", "--samples", "1000", "--out", "t.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let tvds: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(tvds.len(), 3);
    assert!(tvds.windows(2).all(|w| w[0] > w[1]));

    let both = cayley(dir.path(), &["tvd", "--N", "2", "--deltas", "0.1", "--samples", "1000", "--both-sides"]);
    assert_eq!(stdout(&both).lines().count(), 3);
}

#[test]
fn path_check_reports_endpoints() {
    let dir = TempDir::new().unwrap();
    let c = circuit(&dir);
    let o = cayley(dir.path(), &["path-check", &c, "--thetas", "0,0.5,1"]);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["all_residuals_below_tolerance"], true);
    assert_eq!(r["rows"][0]["endpoint_equals_worst"], true);
    assert_eq!(r["rows"][2]["endpoint_product_form"], true);
}
