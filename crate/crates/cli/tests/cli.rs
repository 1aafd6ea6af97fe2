use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cvqkd_cli::commands::{run_keyrate, run_sweep};
use cvqkd_cli::config::{fiber_transmittance, resolve_config_path, RunConfig, SweepSection};
use cvqkd_cli::{EXIT_ABORT, EXIT_CALIBRATION, EXIT_CONFIG, EXIT_OK};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn cvqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd")).args(args).env_remove("CVQKD_CONFIG_DIR").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn g(nu: f64) -> f64 {
    let (x, y) = ((nu + 1.0) / 2.0, (nu - 1.0) / 2.0);
    x * x.log2() - if y > 0.0 { y * y.log2() } else { 0.0 }
}

/// Homodyne Holevo bound from the determinant invariants.
fn chi_homodyne(v_mod: f64, t: f64, xi: f64) -> f64 {
    let a = v_mod + 1.0;
    let b = t * v_mod + 1.0 + xi;
    let c2 = t * (a * a - 1.0);
    let delta = a * a + b * b - 2.0 * c2;
    let d = a * b - c2;
    let z = (delta * delta - 4.0 * d * d).sqrt();
    g(((delta + z) / 2.0).sqrt()) + g(((delta - z) / 2.0).sqrt()) - g((a * (a - c2 / b)).sqrt())
}

#[test]
fn ideal_link_has_no_leak() {
    let out = cvqkd(&["keyrate", "--config", fixture("ideal.toml").to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let r = json(&out);
    assert_eq!(r["chi_eb"].as_f64().unwrap(), 0.0);
    assert_eq!(r["secret_fraction_r"].as_f64().unwrap(), r["i_ab"].as_f64().unwrap());
    assert!((r["i_ab"].as_f64().unwrap() - 0.5 * 11f64.log2()).abs() < 1e-15);
}

#[test]
fn worked_fixture_report() {
    let out = cvqkd(&["keyrate", "--config", fixture("keyrate.toml").to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let r = json(&out);
    let t = r["channel"]["t"].as_f64().unwrap();
    let xi = r["channel"]["xi"].as_f64().unwrap();
    assert!((t - fiber_transmittance(10.0, 0.2) * 0.9 * 0.8).abs() < 1e-15);
    let comps: f64 = r["noise_budget"]["components"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
    assert!((comps - xi).abs() < 1e-15);
    let i_ab = 0.5 * (1.0 + t * 10.0 / (1.0 + xi)).log2();
    let chi = chi_homodyne(10.0, t, xi);
    let sf = 0.97 * 0.9 * (0.95 * i_ab - chi);
    assert!((r["i_ab"].as_f64().unwrap() - i_ab).abs() < 1e-12);
    assert!((r["chi_eb"].as_f64().unwrap() - chi).abs() < 1e-9);
    assert!((r["secret_fraction_r"].as_f64().unwrap() - sf).abs() < 1e-9);
    // locked after the checks above
    assert!((xi - 0.045974486821345646).abs() < 1e-12);
    assert!((r["chi_eb"].as_f64().unwrap() - 1.050618872410349).abs() < 1e-10);
    assert!((r["secret_fraction_r"].as_f64().unwrap() - 0.08537290364886).abs() < 1e-10);
    assert!((r["key_rate_k"].as_f64().unwrap() - 8537290.364886).abs() < 1e-2);
}

#[test]
fn abort_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[protocol]\nv_mod = 10.0\n[channel]\nt = 0.1\nxi = 0.2\n");
    let out = cvqkd(&["keyrate", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(EXIT_ABORT));
    assert_eq!(json(&out)["abort"], Value::Bool(true));
}

#[test]
fn config_errors_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in [
        "[protocol]\nvmod = 10.0\n",
        "[channel]\nt = 0.5\ndistance_km = 3.0\n",
        "[protocol]\nbeta = 1.5\n",
        "[channel]\nt = 1.5\n",
        "hardware_file = \"missing.toml\"\n",
        "[security]\nassumption = \"loose\"\n",
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_config(dir.path(), &format!("c{i}.toml"), text);
        let out = cvqkd(&["keyrate", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(EXIT_CONFIG), "{text}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = cvqkd(&["sweep", "--config", fixture("keyrate.toml").to_str().unwrap(), "--param", "T", "--from", "0.1", "--to", "0.9", "--steps", "1"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    let out = cvqkd(&["sweep", "--config", fixture("keyrate.toml").to_str().unwrap(), "--param", "bogus", "--from", "0.1", "--to", "0.9", "--steps", "3"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    let out = cvqkd(&["keyrate"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn config_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("ideal.toml"), dir.path().join("cvqkd.toml")).unwrap();
    std::fs::copy(fixture("ideal_hardware.toml"), dir.path().join("ideal_hardware.toml")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(["keyrate", "--format", "json"])
        .env("CVQKD_CONFIG_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let named = Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(["keyrate", "--format", "json", "--config", "cvqkd.toml"])
        .env("CVQKD_CONFIG_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(named.stdout, out.stdout);
    assert_eq!(resolve_config_path(None, Some(dir.path())).unwrap(), dir.path().join("cvqkd.toml"));
}

#[test]
fn sweep_csv_layout_and_order() {
    let out = cvqkd(&["sweep", "--config", fixture("keyrate.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# cvqkd-sweep schema v1"));
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let header = rd.headers().unwrap().clone();
    assert_eq!(&header[0], "distance_km");
    let k_col = header.iter().position(|h| h == "key_rate_k").unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 26);
    let d: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(d.windows(2).all(|w| w[0] < w[1]));
    let k: Vec<f64> = rows.iter().map(|r| r[k_col].parse().unwrap()).collect();
    assert!(k.windows(2).all(|w| w[1] < w[0]), "key rate must fall with distance");
}

#[test]
fn degenerate_sweep_equals_keyrate() {
    let cfg = RunConfig::load(&fixture("keyrate.toml")).unwrap();
    let s = cfg.scenario().unwrap();
    let single = run_keyrate(&s).unwrap();
    let axis = SweepSection { param: "distance_km".into(), from: 10.0, to: 10.0, steps: 1, log: false };
    let rows = run_sweep(&s, &axis).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].report, single);
}

#[test]
fn excess_noise_sweep_crosses_zero_once() {
    let cfg = RunConfig::load(&fixture("keyrate.toml")).unwrap();
    let axis = SweepSection { param: "xi".into(), from: 0.0, to: 0.2, steps: 81, log: false };
    let rows = run_sweep(&cfg.scenario().unwrap(), &axis).unwrap();
    let signs: Vec<bool> = rows.iter().map(|r| r.report.secret_fraction_r > 0.0).collect();
    assert!(signs[0] && !signs[80]);
    assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 1);
}

#[test]
fn log_sweep_spacing() {
    let axis = SweepSection { param: "T".into(), from: 0.01, to: 1.0, steps: 3, log: true };
    let v = axis.values();
    assert_eq!(v[0], 0.01);
    assert!((v[1] - 0.1).abs() < 1e-15);
    assert_eq!(v[2], 1.0);
}

#[test]
fn hardware_parameter_sweep() {
    let cfg = RunConfig::load(&fixture("keyrate.toml")).unwrap();
    let axis = SweepSection { param: "nep".into(), from: 1e-13, to: 1e-12, steps: 5, log: true };
    let rows = run_sweep(&cfg.scenario().unwrap(), &axis).unwrap();
    let det: Vec<f64> = rows.iter().map(|r| r.report.noise_budget.get("detection").unwrap()).collect();
    assert!(det.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn budget_command() {
    let out = cvqkd(&["budget", "--hardware", fixture("hardware.toml").to_str().unwrap(), "--format", "json", "--t", "0.5"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let b = json(&out);
    let comps = b["components"]["components"].as_object().unwrap();
    let total: f64 = comps.values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - b["total"].as_f64().unwrap()).abs() < 1e-15);
    let het = json(&cvqkd(&["budget", "--hardware", fixture("hardware.toml").to_str().unwrap(), "--format", "json", "--t", "0.5", "--detection", "heterodyne"]));
    for k in ["detection", "adc", "cmrr"] {
        assert_eq!(het["components"]["components"][k].as_f64().unwrap(), 2.0 * comps[k].as_f64().unwrap());
    }
    let ideal = json(&cvqkd(&["budget", "--hardware", fixture("ideal_hardware.toml").to_str().unwrap(), "--format", "json"]));
    assert_eq!(ideal["total"].as_f64().unwrap(), 0.0);
}

#[test]
fn simulate_then_estimate_from_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("simulate.toml");
    let out_dir = dir.path().join("run");
    let out = cvqkd(&["simulate", "--config", cfg.to_str().unwrap(), "--symbols", "50000", "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert!(report["deltas"]["t_in_se"].as_f64().unwrap().abs() < 5.0);
    assert!(report["deltas"]["xi_in_se"].as_f64().unwrap().abs() < 5.0);
    assert!(report["rng"].as_str().unwrap().contains("ChaCha20"));
    let est = cvqkd(&[
        "estimate",
        "--config",
        cfg.to_str().unwrap(),
        "--records",
        out_dir.join("records.csv").to_str().unwrap(),
        "--calibration",
        out_dir.join("calibration.csv").to_str().unwrap(),
    ]);
    assert_eq!(est.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&est.stderr));
    assert_eq!(json(&est)["estimate"], report["estimate"]);

    let bin_dir = dir.path().join("bin");
    let out = cvqkd(&["simulate", "--config", cfg.to_str().unwrap(), "--symbols", "50000", "--out-dir", bin_dir.to_str().unwrap(), "--binary"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let est = cvqkd(&[
        "estimate",
        "--config",
        cfg.to_str().unwrap(),
        "--records",
        bin_dir.join("records.bin").to_str().unwrap(),
        "--calibration",
        bin_dir.join("calibration.csv").to_str().unwrap(),
    ]);
    assert_eq!(json(&est)["estimate"], report["estimate"]);
}

#[test]
fn misspecified_phi_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(fixture("simulate.toml")).unwrap();
    let low = write_config(dir.path(), "low.toml", &format!("{base}phi_assumed = 1.25\n"));
    let out = cvqkd(&["simulate", "--config", low.to_str().unwrap(), "--symbols", "50000"]);
    let report = json(&out);
    assert!(report["estimate"]["xi_hat"].as_f64().unwrap() > 0.5);
    let warnings: Vec<String> = report["warnings"].as_array().unwrap().iter().map(|w| w.as_str().unwrap().to_string()).collect();
    assert!(warnings.iter().any(|w| w.contains("deviate from the simulated truth")), "{warnings:?}");

    let high = write_config(dir.path(), "high.toml", &format!("{base}phi_assumed = 5.0\n"));
    let out = cvqkd(&["simulate", "--config", high.to_str().unwrap(), "--symbols", "50000"]);
    assert_eq!(out.status.code(), Some(EXIT_CALIBRATION));
}

#[test]
fn distance_sweep_uses_configured_loss() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[channel]\ndistance_km = 5.0\nloss_db_per_km = 0.3\n");
    let s = RunConfig::load(&cfg).unwrap().scenario().unwrap();
    assert!((s.t_total() - 10f64.powf(-0.15)).abs() < 1e-15);
    let axis = SweepSection { param: "distance_km".into(), from: 0.0, to: 20.0, steps: 3, log: false };
    let rows = run_sweep(&s, &axis).unwrap();
    assert!((rows[2].report.channel.t - 10f64.powf(-0.6)).abs() < 1e-15);
}
