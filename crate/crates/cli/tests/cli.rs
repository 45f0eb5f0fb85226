use std::path::Path;
use std::process::{Command, Output};

use fritem::bench::{table1_signal, TABLE1_BOUND_FRACTION, TABLE1_DELTA};
use fritem::FriSignal;
use serde_json::{json, Value};
use tempfile::TempDir;

fn fritem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fritem")).args(args).arg("--out").arg(dir).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn csv_instants(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,t_n"));
    lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
}

fn table1_config() -> (FriSignal, Value) {
    let (x, _, y) = table1_signal(3, 0.9, TABLE1_BOUND_FRACTION, 5).unwrap();
    let signal: Value = serde_json::from_str(&x.to_json().unwrap()).unwrap();
    let cfg = json!({
        "signal": signal,
        "kernel": {"K": 3},
        "tem": {"b": 0.9, "kappa": 1.0, "delta": TABLE1_DELTA, "c": y.max_abs()},
        "window": {"t_obs": 1.0},
        "recovery": {"method": "with-dc", "L": 3},
    });
    (x, cfg)
}

#[test]
fn table1_l3_firing_count() {
    let dir = TempDir::new().unwrap();
    let (_, cfg) = table1_config();
    let path = write_config(dir.path(), "cfg.json", &cfg);
    let out = fritem(dir.path(), &["simulate", "--config", &path]);
    assert!(out.status.success(), "{}", stderr(&out));
    let n = csv_instants(&dir.path().join("firings.csv")).len();
    assert!(n.abs_diff(13) <= 2, "{n}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("-> ok"));
}

#[test]
fn zero_signal_fires_uniformly() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "signal": {"period": 1.0, "pulse": {"kind": "dirac"}, "amplitudes": [0.0], "delays": [0.5]},
        "kernel": {"K": 2},
        "tem": {"b": 1.0, "kappa": 2.0, "delta": 0.05, "c": 0.0},
        "window": {"t_obs": 0.95},
    });
    let path = write_config(dir.path(), "cfg.json", &cfg);
    let out = fritem(dir.path(), &["simulate", "--config", &path]);
    assert!(out.status.success(), "{}", stderr(&out));
    let t = csv_instants(&dir.path().join("firings.csv"));
    assert_eq!(t.len(), 9);
    for (i, ti) in t.iter().enumerate() {
        assert!((ti - 0.1 * (i + 1) as f64).abs() < 1e-12, "{ti}");
    }
}

#[test]
fn simulate_then_recover_round_trip() {
    let dir = TempDir::new().unwrap();
    let (x, cfg) = table1_config();
    let path = write_config(dir.path(), "cfg.json", &cfg);
    assert!(fritem(dir.path(), &["simulate", "--config", &path]).status.success());
    let firings = dir.path().join("firings.json");
    let out = fritem(dir.path(), &["recover", "--config", &path, "--firings", firings.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let est: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("recovered.json")).unwrap()).unwrap();
    let mut pairs: Vec<(f64, f64)> = est["delays"]
        .as_array()
        .unwrap()
        .iter()
        .zip(est["amplitudes"].as_array().unwrap())
        .map(|(d, a)| (d.as_f64().unwrap(), a.as_f64().unwrap()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut truth: Vec<(f64, f64)> = x.delays().iter().copied().zip(x.amplitudes().iter().copied()).collect();
    truth.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(pairs.len(), truth.len());
    for ((d, a), (td, ta)) in pairs.iter().zip(&truth) {
        assert!((d - td).abs() < 1e-6 && (a - ta).abs() < 1e-6, "{d} {a} vs {td} {ta}");
    }
    assert!(est["condition_number"].as_f64().unwrap() >= 1.0);
    assert!(est["residual"].is_number());

    // the CSV form needs the TEM parameters from the config
    let csv = dir.path().join("firings.csv");
    let out = fritem(dir.path(), &["recover", "--config", &path, "--firings", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn truncated_firings_are_a_precondition_failure() {
    let dir = TempDir::new().unwrap();
    let (_, cfg) = table1_config();
    let path = write_config(dir.path(), "cfg.json", &cfg);
    assert!(fritem(dir.path(), &["simulate", "--config", &path]).status.success());
    let t = csv_instants(&dir.path().join("firings.csv"));
    let mut short = String::from("n,t_n\n");
    for (i, ti) in t.iter().take(2 * 3 + 1).enumerate() {
        short.push_str(&format!("{},{ti:.17e}\n", i + 1));
    }
    let short_path = dir.path().join("short.csv");
    std::fs::write(&short_path, short).unwrap();
    let out = fritem(dir.path(), &["recover", "--config", &path, "--firings", short_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("N >= 2K+2"), "{}", stderr(&out));
}

#[test]
fn dc_free_kernel_is_better_conditioned() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "signal": {
            "period": 1.0,
            "pulse": {"kind": "bspline", "order": 3, "scale": 20.0},
            "amplitudes": [0.5, -0.45, 0.4],
            "delays": [0.2, 0.4, 0.8],
        },
        "kernel": {"K": 3},
        "tem": {"b": 1.2, "kappa": 1.0, "delta": 0.05},
        "window": {"t_obs": 1.0},
        "recovery": {"L": 3, "on_grid": true, "grid_resolution": 0.01},
    });
    let path = write_config(dir.path(), "cfg.json", &cfg);
    let mut cond = Vec::new();
    for method in ["with-dc", "no-dc"] {
        let sub = dir.path().join(method);
        let out = fritem(&sub, &["simulate", "--config", &path, "--method", method]);
        assert!(out.status.success(), "{}", stderr(&out));
        let f = sub.join("firings.json");
        let out = fritem(&sub, &["recover", "--config", &path, "--method", method, "--firings", f.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
        let est: Value = serde_json::from_slice(&std::fs::read(sub.join("recovered.json")).unwrap()).unwrap();
        cond.push(est["condition_number"].as_f64().unwrap());
    }
    assert!(cond[1] < cond[0], "{cond:?}");
}

#[test]
fn study_table1_has_three_rows() {
    let dir = TempDir::new().unwrap();
    let out = fritem(dir.path(), &["study", "table1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("table1_1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn study_cond_quick_mode() {
    let dir = TempDir::new().unwrap();
    let out = fritem(dir.path(), &["study", "cond", "--trials", "100"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("cond_1.csv").is_file());
}

#[test]
fn study_mse_noiseless() {
    let dir = TempDir::new().unwrap();
    let out = fritem(dir.path(), &["study", "mse", "--noiseless", "--trials", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn kernel_dump_writes_both_files() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "cfg.json", &json!({"signal": null, "kernel": {"K": 4, "include_dc": false}}));
    let out = fritem(dir.path(), &["kernel-dump", "--config", &path, "--points", "64"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
    assert_eq!(csv.lines().count(), 65);
    assert!(dir.path().join("kernel.json").is_file());
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(fritem(dir.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(fritem(dir.path(), &["simulate", "--config", "/nonexistent/cfg.json"]).status.code(), Some(1));
    let path = write_config(dir.path(), "cfg.json", &json!({"kernel": {"K": 2}, "colour": "blue"}));
    assert_eq!(fritem(dir.path(), &["simulate", "--config", &path]).status.code(), Some(1));
    assert_eq!(fritem(dir.path(), &["recover"]).status.code(), Some(1));
}

#[test]
fn insufficient_bias_is_a_precondition_failure() {
    let dir = TempDir::new().unwrap();
    let (_, mut cfg) = table1_config();
    cfg["tem"]["delta"] = json!(0.5);
    let path = write_config(dir.path(), "cfg.json", &cfg);
    let out = fritem(dir.path(), &["simulate", "--config", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("2K+2"));
}
