//! End-to-end tests of the `ablrt` binary: schemas, exit codes, determinism,
//! and three replayed examples per command.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ablrt"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn ablrt")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

type Meta = Vec<(String, String)>;

/// Parse a CSV table: (meta pairs, header, rows).
fn parse_csv(text: &str) -> (Meta, Vec<String>, Vec<Vec<String>>) {
    let mut meta = Vec::new();
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest.split_once(" = ").expect("meta line");
            meta.push((k.to_string(), v.to_string()));
        } else if header.is_empty() {
            header = line.split(',').map(|s| s.to_string()).collect();
        } else {
            rows.push(line.split(',').map(|s| s.to_string()).collect());
        }
    }
    (meta, header, rows)
}

fn column(rows: &[Vec<String>], idx: usize) -> Vec<f64> {
    rows.iter().map(|r| r[idx].parse().unwrap()).collect()
}

// ---------- profile ----------

#[test]
fn profile_csv_contract() {
    let text = stdout(&["profile", "--nu", "2", "--points", "200"]);
    let (meta, header, rows) = parse_csv(&text);
    assert_eq!(header, ["y", "xi", "k0_scaled"]);
    assert_eq!(rows.len(), 200);
    let xi = column(&rows, 1);
    assert!(xi.windows(2).all(|w| w[1] > w[0]), "xi not monotone");
    assert!(meta.iter().any(|(k, _)| k == "artifact_version"));
    assert!(meta.iter().any(|(k, v)| k == "nu" && v.starts_with("2.0")));
}

#[test]
fn profile_rejects_small_nu() {
    let out = run(&["profile", "--nu", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("\"kind\":\"validation\""),
        "machine-readable record: {err}"
    );
}

#[test]
fn profile_matches_golden() {
    let text = stdout(&[
        "profile",
        "--nu",
        "2",
        "--points",
        "11",
        "--y-min=-5",
        "--y-max",
        "5",
    ]);
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/profile_nu2.csv");
    let golden = std::fs::read_to_string(golden_path).expect("golden file");
    assert_eq!(text, golden, "profile output drifted from the golden file");
}

// ---------- evans-scan ----------

#[test]
fn evans_scan_sign_change_and_anchor() {
    let text = stdout(&[
        "evans-scan",
        "--eps",
        "1e-4",
        "--lambda-min",
        "0.9",
        "--lambda-max",
        "1.3",
        "--points",
        "21",
    ]);
    let (_, header, rows) = parse_csv(&text);
    assert_eq!(header[..4], ["lambda", "epsilon", "value", "spread"]);
    let lambda = column(&rows, 0);
    let value = column(&rows, 2);
    let spread = column(&rows, 3);
    let changes = value
        .windows(2)
        .filter(|w| w[0].signum() != w[1].signum())
        .count();
    assert_eq!(changes, 1, "expected exactly one sign change");
    // the lambda = 1 row equals 2 (eps/nu)^(1/nu)
    let i1 = lambda
        .iter()
        .position(|&l| (l - 1.0).abs() < 1e-12)
        .unwrap();
    let exact = 2.0 * (1e-4_f64 / 2.0).sqrt();
    assert!((value[i1] - exact).abs() < 1e-8 * exact);
    assert!(spread.iter().all(|&s| s <= 1e-6));
}

#[test]
fn evans_scan_json_roundtrip() {
    let text = stdout(&[
        "evans-scan",
        "--eps",
        "1e-3",
        "--points",
        "3",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(doc["meta"]["eps"].is_string());
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
    let v: f64 = doc["rows"][0]["value"].as_str().unwrap().parse().unwrap();
    assert!(v.is_finite());
}

#[test]
fn evans_scan_matches_json_golden() {
    let text = stdout(&[
        "evans-scan", "--eps", "1e-3", "--points", "3", "--lambda-min", "1.0", "--lambda-max",
        "1.1", "--format", "json",
    ]);
    let golden_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/evans_scan_eps1e-3.json");
    let golden = std::fs::read_to_string(golden_path).expect("golden file");
    assert_eq!(text, golden, "evans-scan JSON output drifted from the golden file");
}

#[test]
fn evans_scan_rejects_bad_eps() {
    let out = run(&["evans-scan", "--eps", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

// ---------- dispersion ----------

#[test]
fn dispersion_rows_and_caps() {
    let text = stdout(&[
        "dispersion",
        "--l0",
        "1e-2",
        "--k-list",
        "0.5,2,10,200",
        "--jobs",
        "2",
    ]);
    let (_, header, rows) = parse_csv(&text);
    assert_eq!(header[0], "k");
    let k = column(&rows, 0);
    let gamma = column(&rows, 3);
    let cap = column(&rows, 5);
    for i in 0..rows.len() {
        assert!(gamma[i] < cap[i], "gamma under the cap");
        assert_eq!(rows[i][6], "true", "admissible flag");
        assert!(rows[i][8].is_empty(), "no row errors");
    }
    // gamma/sqrt(g k) increases toward 1 as k L0 -> 0
    let r0 = gamma[0] / k[0].sqrt();
    let r1 = gamma[1] / k[1].sqrt();
    assert!(r0 > r1 && r0 < 1.0);
    // large k row comes from the spectral route
    assert_eq!(rows[3][7], "spectral");
    assert_eq!(rows[0][7], "evans");
}

// ---------- expansion-check ----------

#[test]
fn expansion_check_report() {
    let text = stdout(&[
        "expansion-check",
        "--eps-min",
        "1e-5",
        "--eps-max",
        "1e-3",
        "--points",
        "5",
    ]);
    let (meta, _, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 5);
    let get = |key: &str| -> String {
        meta.iter()
            .find(|(k, _)| k == key)
            .unwrap_or_else(|| panic!("meta {key}"))
            .1
            .clone()
    };
    let slope: f64 = get("slope").parse().unwrap();
    assert!(slope >= 0.9, "slope {slope}");
    assert_eq!(get("b0_matched"), "-2^(-1/nu) Gamma(1+1/nu)");
    let k2_fit: f64 = get("k2_fit").parse().unwrap();
    let k2_pred: f64 = get("k2_pred").parse().unwrap();
    assert!(
        (k2_fit - k2_pred).abs() <= 0.1 * k2_pred.abs(),
        "{k2_fit} vs {k2_pred}"
    );
}

// ---------- spectral ----------

#[test]
fn spectral_rows_in_window() {
    let text = stdout(&["spectral", "--k-list", "5,50", "--jobs", "2"]);
    let (meta, _, rows) = parse_csv(&text);
    let cap: f64 = meta
        .iter()
        .find(|(k, _)| k == "lambda_cap")
        .unwrap()
        .1
        .parse()
        .unwrap();
    let gamma = column(&rows, 1);
    for g in &gamma {
        assert!(*g > 0.5 * cap && *g < cap);
    }
    assert!(gamma[1] > gamma[0], "monotone in k");
}

#[test]
fn spectral_reports_numerical_failure_below_k_star() {
    // far below k_*, the minimum eigenvalue never crosses zero
    let out = run(&["spectral", "--k-list", "0.01"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"kind\":\"numerical\""), "{err}");
}

// ---------- evolve ----------

#[test]
fn evolve_eigen_matches_spectral_gamma() {
    let text = stdout(&["evolve", "--k", "5", "--t-final", "6", "--n", "1501"]);
    let (meta, _, rows) = parse_csv(&text);
    let get = |key: &str| -> f64 {
        meta.iter()
            .find(|(k, _)| k == key)
            .unwrap()
            .1
            .parse()
            .unwrap()
    };
    let measured = get("gamma_measured");
    let reference = get("gamma_spectral");
    assert!((measured - reference).abs() <= 0.01 * reference);
    assert!(get("fit_r_squared") > 0.999);
    // norms grow and the log-derivative column settles near gamma
    let norms = column(&rows, 1);
    assert!(norms.last().unwrap() > norms.first().unwrap());
}

#[test]
fn evolve_random_is_deterministic() {
    // identical config (seed included) => byte-identical output files,
    // independent of whether the growth fit converged
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str, seed: &str| -> String {
        let path = dir.path().join(name);
        let _ = bin()
            .args([
                "evolve",
                "--k",
                "5",
                "--init",
                "random",
                "--seed",
                seed,
                "--t-final",
                "4",
                "--n",
                "1201",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        std::fs::read_to_string(path).unwrap()
    };
    let a = out("a.csv", "42");
    let b = out("b.csv", "42");
    assert_eq!(a, b, "same seed must give byte-identical output");
    let c = out("c.csv", "43");
    assert_ne!(a, c, "different seed must change the trajectory");
    // a long enough random run resolves the dominant mode and fits cleanly
    let long = stdout(&[
        "evolve",
        "--k",
        "5",
        "--init",
        "random",
        "--seed",
        "42",
        "--t-final",
        "14",
        "--n",
        "901",
    ]);
    let (meta, _, _) = parse_csv(&long);
    let r2: f64 = meta
        .iter()
        .find(|(k, _)| k == "fit_r_squared")
        .unwrap()
        .1
        .parse()
        .unwrap();
    let rate: f64 = meta
        .iter()
        .find(|(k, _)| k == "gamma_measured")
        .unwrap()
        .1
        .parse()
        .unwrap();
    let cap: f64 = meta
        .iter()
        .find(|(k, _)| k == "lambda_cap")
        .unwrap()
        .1
        .parse()
        .unwrap();
    assert!(r2 >= 0.999);
    assert!(rate <= cap * 1.01, "rate {rate} exceeds the cap {cap}");
}

#[test]
fn evolve_zero_state_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("zero.json");
    // grid length for k = 5 with n override 801
    let zeros = vec![0.0; 801];
    let doc = serde_json::json!({
        "tau_re": zeros, "tau_im": zeros, "b_re": zeros, "b_im": zeros,
    });
    std::fs::write(&state, doc.to_string()).unwrap();
    let out = run(&[
        "evolve",
        "--k",
        "5",
        "--init",
        "file",
        "--state-file",
        state.to_str().unwrap(),
        "--t-final",
        "3",
        "--n",
        "801",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "degenerate trajectory must be rejected"
    );
}

// ---------- config & environment ----------

#[test]
fn config_file_precedence_and_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"nu": 3.0, "g": 2.0}"#).unwrap();
    // flag overrides file for nu; file wins over default for g
    let text = stdout(&[
        "profile",
        "--config",
        cfg.to_str().unwrap(),
        "--nu",
        "1.5",
        "--points",
        "3",
    ]);
    let (meta, _, _) = parse_csv(&text);
    let get = |key: &str| meta.iter().find(|(k, _)| k == key).unwrap().1.clone();
    assert!(get("nu").starts_with("1.5"));
    assert!(get("g").starts_with("2.0"));

    // ABLRT_OUT_DIR redirects the output directory only
    let out_dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["profile", "--points", "3", "--out", "table.csv"])
        .env("ABLRT_OUT_DIR", out_dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_dir.path().join("table.csv").exists());
}
