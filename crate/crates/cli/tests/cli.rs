//! End-to-end checks of the binary: file shapes, documented values,
//! determinism and error reporting.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const FLAT_CONFIG: &str = r#"{
  "channel": {
    "power": 2.0,
    "noise": {"type": "white", "level": 1.0},
    "mismatch": "matched",
    "input": "flat"
  },
  "beta": 1.0,
  "rates": {"min": 0.0, "max": 0.3, "count": 31},
  "sim": {"n": 2, "ell": 4, "rate": 0.21, "trials_codes": 4, "trials_noise": 500, "seed": 9},
  "evd": {"n_list": [32, 256]},
  "waterpour": {"rate": 0.05}
}"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg_path = dir.join("config.json");
    fs::write(&cfg_path, config).unwrap();
    let out_dir = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_trc"))
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    (header, rows)
}

#[test]
fn awgn_curve_shape_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), FLAT_CONFIG, &["--grid", "64", "awgn-curve"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("out/awgn_curve.csv"));
    assert_eq!(header, ["rate", "exponent_lower", "exponent_exact", "r_star"]);
    assert_eq!(rows.len(), 31);
    // zero-rate row carries snr/4
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[0][1] - 0.5).abs() < 1e-12);
    // constant marker column holds the critical rate
    let r_star = rows[0][3];
    assert!(rows.iter().all(|r| r[3] == r_star));
    assert!((r_star - 0.25 * ((1.0 + 2f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
    // beyond the critical rate the lower bound is affine with slope -1
    for w in rows.windows(2) {
        if w[0][0] > r_star {
            let slope = (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]);
            assert!((slope + 1.0).abs() < 1e-9, "slope {slope}");
        }
    }
}

#[test]
fn rates_on_flat_channel() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), FLAT_CONFIG, &["--grid", "64", "rates"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/rates.json")).unwrap())
            .unwrap();
    let want_r_star = 0.25 * ((1.0 + 2f64.sqrt()) / 2.0).ln();
    assert!((value["r_star"].as_f64().unwrap() - want_r_star).abs() < 1e-9);
    assert!((value["zero_rate_exponent"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!((value["lambda_star"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!(value["r_t"].as_f64().unwrap() >= 0.0);
    assert!(value["r0"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("out/tightness.json").exists());
    let (_, profile) = read_csv(&dir.path().join("out/zeta_profile.csv"));
    assert!(profile.len() > 10);
}

#[test]
fn evd_check_gaps_shrink() {
    let dir = tempfile::tempdir().unwrap();
    let config = FLAT_CONFIG.replace(
        r#""noise": {"type": "white", "level": 1.0}"#,
        r#""noise": {"type": "ar1", "a": 0.5, "sigma_w2": 1.0}"#,
    );
    let out = run(dir.path(), &config, &["evd-check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/evd_check.csv")).unwrap();
    let gap = |n: &str, g: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(&format!("{n},{g},")))
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(gap("256", "ln(x)") < gap("32", "ln(x)"));
    assert!(gap("256", "x^2") < gap("32", "x^2"));
}

#[test]
fn simulate_zero_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let config = FLAT_CONFIG.replace("\"beta\": 1.0", "\"beta\": 1e-12");
    let out = run(dir.path(), &config, &["--grid", "64", "simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/sim.json")).unwrap())
            .unwrap();
    let m = value["messages"].as_f64().unwrap();
    let n = value["block_len"].as_f64().unwrap();
    let target = -((m - 1.0) / m).ln() / n;
    let trc = value["trc_estimate"].as_f64().unwrap();
    let rc = value["rc_estimate"].as_f64().unwrap();
    let ci = value["ci_radius"].as_f64().unwrap();
    assert!((trc - target).abs() <= 3.0 * ci + 1e-4, "{trc} vs {target}");
    assert!((rc - target).abs() <= 3.0 * ci + 1e-4, "{rc} vs {target}");
    let codes = fs::read_to_string(dir.path().join("out/sim_codes.csv")).unwrap();
    assert_eq!(codes.lines().count(), 1 + 4);
}

#[test]
fn colored_curve_deterministic() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let config = FLAT_CONFIG.replace(
        r#""noise": {"type": "white", "level": 1.0}"#,
        r#""noise": {"type": "ar1", "a": 0.5, "sigma_w2": 1.0}"#,
    );
    let config = config.replace(r#""count": 31"#, r#""count": 7"#);
    for d in [&dir1, &dir2] {
        let out = run(d.path(), &config, &["--grid", "128", "colored-curve"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir1.path().join("out/colored_curve.csv")).unwrap();
    let b = fs::read(dir2.path().join("out/colored_curve.csv")).unwrap();
    assert_eq!(a, b, "identical configuration must give identical bytes");
    let (header, rows) = read_csv(&dir1.path().join("out/colored_curve.csv"));
    assert_eq!(header, ["rate", "exponent", "theta_opt", "lambda_opt"]);
    assert_eq!(rows.len(), 7);
    for w in rows.windows(2) {
        assert!(w[1][1] <= w[0][1] + 1e-9, "exponent must not increase");
    }
}

#[test]
fn waterpour_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = FLAT_CONFIG.replace(
        r#""noise": {"type": "white", "level": 1.0}"#,
        r#""noise": {"type": "two_level", "low": 0.5, "high": 2.0, "high_fraction": 0.5}"#,
    );
    let out = run(dir.path(), &config, &["--grid", "64", "waterpour"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/waterpour.json")).unwrap())
            .unwrap();
    assert!((value["achieved_power"].as_f64().unwrap() - 2.0).abs() < 1e-8);
    let (header, rows) = read_csv(&dir.path().join("out/sx.csv"));
    assert_eq!(header, ["omega", "sx"]);
    assert_eq!(rows.len(), 64);
    let mean: f64 = rows.iter().map(|r| r[1]).sum::<f64>() / 64.0;
    assert!((mean - 2.0).abs() < 1e-8);
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // unknown key
    let bad = FLAT_CONFIG.replace("\"beta\": 1.0", "\"beta\": 1.0, \"bogus\": 1");
    let out = run(dir.path(), &bad, &["rates"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config parse error"));
    // missing required flags
    let out = Command::new(env!("CARGO_BIN_EXE_trc"))
        .arg("rates")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // missing section
    let no_rates = FLAT_CONFIG.replace(r#""rates": {"min": 0.0, "max": 0.3, "count": 31},"#, "");
    let out = run(dir.path(), &no_rates, &["awgn-curve"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rates"));
}
