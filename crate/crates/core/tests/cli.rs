use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn netcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netcm")).args(args).output().expect("binary runs")
}

fn netcm_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netcm"))
        .args(args)
        .env(key, val)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn check_ghz_violation() {
    let out = netcm(&[
        "check", "--state", "ghz", "--parties", "3", "--dim", "2", "--visibility", "0.6", "--observables", "pauli-z",
        "--criterion", "trace-norm", "--topology", "triangle",
    ]);
    assert_eq!(code(&out), 1);
    let r = json(&out);
    assert!((r["lhs"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!((r["rhs"].as_f64().unwrap() - 3.6).abs() < 1e-12);
    assert_eq!(r["pass"], false);
    assert_eq!(r["schema_version"], "1");
}

#[test]
fn check_passes_below_threshold() {
    let out = netcm(&["check", "--state", "ghz", "--visibility", "0.4", "--topology", "triangle"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["pass"], true);
}

#[test]
fn scan_w_flips_near_three_quarters() {
    let out = netcm(&["scan", "--state", "w", "--observables", "w-set", "--criterion", "trace-norm", "--grid", "0:1:0.01"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("visibility,lhs,rhs,margin,pass"));
    let rows: Vec<(f64, bool)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[4] == "true")
        })
        .collect();
    assert_eq!(rows.len(), 101);
    let first_fail = rows.iter().find(|(_, pass)| !pass).unwrap().0;
    assert!((first_fail - 0.75).abs() <= 0.01 + 1e-12, "first failing v {first_fail}");
}

#[test]
fn scan_refine_reports_threshold() {
    let out = netcm(&["scan", "--state", "ghz", "--parties", "5", "--grid", "0:1:0.5", "--refine", "1e-9"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().last().unwrap();
    let t: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((t - 0.25).abs() < 1e-6, "{line}");
}

#[test]
fn xi_check_on_exported_ququart_ghz() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.ncmx");
    let m = m.to_str().unwrap();
    let out = netcm(&["export", "--state", "ghz", "--dim", "4", "--visibility", "0.1", "--out", m]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = netcm(&["check", "--state-file", m, "--dims", "4,4,4", "--split", "2x2", "--criterion", "xi-psd"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["criterion"], "xi-psd");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = netcm(&["check", "--state", "w", "--observables", "w-set", "--visibility", "0.8", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&out), 1);
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn feasibility_exit_codes_and_witness() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("btn.json");
    std::fs::write(
        &spec,
        r#"{"family": "btn", "params": {"sources": [{"family": "bell"}, {"family": "bell", "visibility": 0.5}, {"family": "bell"}]}}"#,
    )
    .unwrap();
    let wdir = dir.path().join("witness");
    let out = netcm(&[
        "feasibility", "--state-spec", spec.to_str().unwrap(), "--topology", "triangle", "--witness-dir",
        wdir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["status"], "feasible");
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(wdir.join("manifest.json")).unwrap()).unwrap();
    for part in manifest["parts"].as_array().unwrap() {
        assert!(Path::new(&wdir).join(part["file"].as_str().unwrap()).exists());
    }

    let out = netcm(&["feasibility", "--state", "ghz", "--visibility", "0.8", "--observables", "pauli-z", "--topology", "triangle"]);
    assert_eq!(code(&out), 1);
    let r = json(&out);
    assert_eq!(r["status"], "infeasible-evidence");
    assert!(r["caveat"].as_str().unwrap().contains("not a certificate"));

    // residual floor 0.2 sits between tol and 10 tol
    let out = netcm(&[
        "feasibility", "--state", "ghz", "--visibility", "0.7", "--observables", "pauli-z", "--topology", "triangle",
        "--tol", "0.05", "--max-iter", "2000",
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["status"], "inconclusive");
}

#[test]
fn feasibility_from_exported_cm() {
    let dir = tempfile::tempdir().unwrap();
    let cm = dir.path().join("g.ncmx");
    let cm = cm.to_str().unwrap();
    let out = netcm(&["export", "--state", "w", "--visibility", "0.5", "--cm", "w-set", "--out", cm]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("g.json").exists());
    let out = netcm(&["feasibility", "--cm", cm, "--topology", "triangle"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn decompose_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("btn.json");
    std::fs::write(&spec, r#"{"family": "btn", "params": {"sources": [{"family": "bell"}, {"family": "bell"}, {"family": "bell"}]}}"#)
        .unwrap();
    let parts = dir.path().join("parts");
    let out = netcm(&["decompose", "--state-spec", spec.to_str().unwrap(), "--out-dir", parts.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["pass"], true);
    assert!(r["sum_residual"].as_f64().unwrap() < 1e-9);
    for name in ["T_a", "T_b", "T_c", "R"] {
        assert!(parts.join(format!("{name}.ncmx")).exists());
    }
}

#[test]
fn fidelity_bound_runs() {
    let out = netcm(&["fidelity-bound", "--tol", "1e-4", "--restarts", "4", "--iterations", "500"]);
    assert_eq!(code(&out), 0);
    let b = json(&out)["bound"].as_f64().unwrap();
    assert!(b > 0.0 && b < 1.0);
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(code(&netcm(&["check", "--state", "ghz", "--observables", "bogus"])), 64);
    assert_eq!(code(&netcm(&["check", "--state", "nope"])), 64);
    assert_eq!(code(&netcm(&["frobnicate"])), 64);
    assert_eq!(code(&netcm(&["scan", "--state", "ghz", "--grid", "1:0:0.1"])), 64);
    assert_eq!(code(&netcm(&["check", "--state-spec", "/definitely/missing.json"])), 74);
    assert_eq!(code(&netcm(&["--help"])), 0);

    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.json");
    std::fs::write(&spec, r#"{"family": "ghz", "colour": "red"}"#).unwrap();
    assert_eq!(code(&netcm(&["check", "--state-spec", spec.to_str().unwrap()])), 64);
}

#[test]
fn thread_count_from_environment() {
    let args = ["scan", "--state", "ghz", "--grid", "0:1:0.1"];
    let one = netcm_env(&args, "NETCM_THREADS", "1");
    let four = netcm_env(&args, "NETCM_THREADS", "4");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(code(&netcm_env(&args, "NETCM_THREADS", "many")), 64);
}

#[test]
fn schema_subcommand() {
    let out = netcm(&["schema"]);
    assert_eq!(code(&out), 0);
    let s = json(&out);
    assert!(s["$defs"]["criterion"].is_object());
}
