use std::path::Path;
use std::process::{Command, Output};

use eit_noise::output::CSV_HEADER;

fn eit_noise(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eit-noise"));
    cmd.args(args).env_remove("EIT_NOISE_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn scan_to(path: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut all = vec!["scan", "--out", path.to_str().unwrap()];
    all.extend_from_slice(args);
    eit_noise(&all, envs)
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip_while(|l| *l != CSV_HEADER)
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

/// Everything except the echoed output path.
fn without_out(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with("#@ out =")).collect()
}

#[test]
fn csv_has_the_fixed_header_and_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.csv");
    let out = scan_to(&path, &["--preset", "fig1a", "--set", "n_points=11"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().filter(|l| *l == CSV_HEADER).count(), 1);
    let body: Vec<&str> = text.lines().skip_while(|l| *l != CSV_HEADER).skip(1).collect();
    assert_eq!(body.len(), 11);
    for field in body[3].split(',') {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
    }
    let rows = data_rows(&text);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
    assert_eq!((rows[0][0], rows[10][0]), (-2.0, 2.0));
    assert!(text.contains("# units:"));
}

#[test]
fn empty_cavity_is_at_shot_noise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    assert!(scan_to(&path, &["--preset", "empty_cavity"], &[]).status.success());
    for row in data_rows(&std::fs::read_to_string(&path).unwrap()) {
        for v in &row[2..8] {
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
        assert!(row[8].abs() < 1e-12);
    }
}

#[test]
fn header_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["csv", "json"] {
        let first = dir.path().join(format!("first.{format}"));
        let second = dir.path().join(format!("second.{format}"));
        let args = ["--preset", "fig1b", "--set", "n_points=21", "--set", "gamma12=0.03", "--format", format];
        assert!(scan_to(&first, &args, &[]).status.success());
        let rerun = scan_to(&second, &["--config", first.to_str().unwrap()], &[]);
        assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
        let (a, b) = (std::fs::read_to_string(&first).unwrap(), std::fs::read_to_string(&second).unwrap());
        if format == "csv" {
            assert_eq!(without_out(&a), without_out(&b));
        } else {
            let strip = |t: &str| {
                let mut v: serde_json::Value = serde_json::from_str(t).unwrap();
                v["metadata"]["config"]["out"] = serde_json::Value::Null;
                v
            };
            assert_eq!(strip(&a), strip(&b));
        }
    }
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let four = dir.path().join("four.csv");
    let again = dir.path().join("again.csv");
    let args = ["--preset", "fig1a", "--set", "n_points=31"];
    assert!(scan_to(&one, &args, &[("EIT_NOISE_THREADS", "1")]).status.success());
    assert!(scan_to(&four, &args, &[("EIT_NOISE_THREADS", "4")]).status.success());
    assert!(scan_to(&again, &args, &[]).status.success());
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(without_out(&read(&one)), without_out(&read(&four)));
    assert_eq!(without_out(&read(&one)), without_out(&read(&again)));
}

#[test]
fn diagnostics_sidecar_holds_the_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let out = scan_to(&path, &["--preset", "fig1a", "--set", "n_points=3", "--set", "include_diagnostics=true"], &[]);
    assert!(out.status.success());
    let sidecar = eit_noise::diagnostics_path(&path);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar).unwrap()).unwrap();
    let points = doc["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    for key in ["drift", "noise", "covariance"] {
        let m = points[1][key].as_array().unwrap();
        assert_eq!(m.len(), 12);
        assert_eq!(m[0].as_array().unwrap().len(), 12);
    }
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let code = |o: Output| o.status.code();

    assert_eq!(code(scan_to(&path, &["--preset", "fig1a", "--set", "bogus=1"], &[])), Some(1));
    assert_eq!(code(scan_to(&path, &["--preset", "fig1a", "--set", "tau=-1"], &[])), Some(1));
    assert_eq!(code(scan_to(&path, &["--preset", "nope"], &[])), Some(1));
    assert_eq!(code(scan_to(&path, &["--config", "/nonexistent.conf"], &[])), Some(1));
    assert_eq!(code(scan_to(&path, &["--preset", "fig1a"], &[("EIT_NOISE_THREADS", "zero")])), Some(1));
    assert_eq!(code(eit_noise(&["scan"], &[])), Some(1));

    let lopsided = scan_to(&path, &["--preset", "fig1a", "--set", "n_points=5", "--set", "alpha2_in=0"], &[]);
    let stderr = String::from_utf8_lossy(&lopsided.stderr).to_string();
    assert_eq!(lopsided.status.code(), Some(2), "{stderr}");
    assert!(stderr.contains("point 0"), "{stderr}");
}

#[test]
fn quick_validation_passes() {
    let out = eit_noise(&["validate", "--level", "quick"], &[]);
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{report}");
    assert!(report.contains("0 failed"));
}

#[test]
fn corrupted_drift_sign_fails_the_lyapunov_check() {
    let out = eit_noise(&["validate", "--corrupt-drift-sign"], &[]);
    let report = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(3));
    assert!(report.lines().any(|l| l.starts_with("FAIL") && l.contains("Lyapunov integral identity")), "{report}");
}
