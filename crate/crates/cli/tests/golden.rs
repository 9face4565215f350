use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn fraccli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraccli")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value_after(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse::<f64>().unwrap()))
        .unwrap_or_else(|| panic!("no '{key}' in output:\n{text}"))
}

#[test]
fn ml_exponential() {
    let o = fraccli(&["ml", "--alpha", "1", "--beta", "1", "--z", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("2.718281828459045"));
}

#[test]
fn ml_complex_argument() {
    // E_{2,1}(-x²) = cos x
    let o = fraccli(&["ml", "--alpha", "2", "--z", "-4"]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 2f64.cos()).abs() < 1e-13);
    let o = fraccli(&["ml", "--alpha", "1", "--z", "0,3.141592653589793"]);
    let parts: Vec<f64> = stdout(&o).split_whitespace().map(|s| s.parse().unwrap()).collect();
    assert!((parts[0] + 1.0).abs() < 1e-14 && parts[1].abs() < 1e-14);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(fraccli(&[]).status.code(), Some(2));
    assert_eq!(fraccli(&["bogus"]).status.code(), Some(2));
    assert_eq!(fraccli(&["ml", "--alpha", "1", "--z", "one"]).status.code(), Some(2));
    assert_eq!(fraccli(&["ml", "--z", "1"]).status.code(), Some(2));
    assert_eq!(fraccli(&["solve", "--config", "/nonexistent/problem.json"]).status.code(), Some(2));
}

#[test]
fn numeric_errors_exit_1() {
    let o = fraccli(&["ml", "--alpha=-1", "--z", "1"]);
    assert_eq!(o.status.code(), Some(1));
    // a custom contour inside the sector is accepted
    let o = fraccli(&["solve", "--config", data("scalar.json").to_str().unwrap(), "--contour-theta", "3.1", "--grid-n", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // α·θ = 3.25 exceeds φ = 2.6
    let o = fraccli(&["solve", "--config", data("forced_matrix.json").to_str().unwrap(), "--contour-theta", "2.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = fraccli(&["diffuse", "--config", data("diffuse_bad_rotation.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn frac_integral_of_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("half.csv");
    let o = fraccli(&[
        "frac",
        "--op",
        "integral",
        "--alpha",
        "0.5",
        data("ones.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,re_0,im_0"));
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let e = 2.0 * (cols[0] / std::f64::consts::PI).sqrt();
        assert!((cols[1] - e).abs() < 1e-12, "{line}");
    }
}

#[test]
fn solve_scalar_prints_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = fraccli(&[
        "solve",
        "--config",
        data("scalar.json").to_str().unwrap(),
        "--grid-n",
        "2048",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = value_after(&stdout(&o), "residual_sup");
    assert!(r <= 1e-4, "{r}");
    for f in ["u.csv", "frac_deriv.csv", "au.csv", "diagnostics.json", "plot_data.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    for key in ["residual_sup", "holder_exponent_frac_deriv", "holder_exponent_Au", "compatibility", "mass_trace"] {
        assert!(diag.get(key).is_some(), "{key}");
    }
}

#[test]
fn solve_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = fraccli(&[
            "solve",
            "--config",
            data("forced_matrix.json").to_str().unwrap(),
            "--grid-n",
            "256",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["u.csv", "frac_deriv.csv", "au.csv", "diagnostics.json", "plot_data.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
}

#[test]
fn check_flags_nonzero_g0() {
    let o = fraccli(&["check", "--config", data("rl_incompatible.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["overall"], serde_json::Value::Bool(false));
    let g0 = r["entries"].as_array().unwrap().iter().find(|e| e["id"] == "g0_zero").unwrap();
    assert_eq!(g0["verdict"], "fail");
    // β below α - 1 turns the condition into an interpolation bound
    let o = fraccli(&["check", "--config", data("rl_incompatible.json").to_str().unwrap(), "--beta", "0.3"]);
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["overall"], serde_json::Value::Bool(true));
}

#[test]
fn check_without_target_is_a_usage_error() {
    assert_eq!(fraccli(&["check", "--config", data("scalar.json").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn diffuse_conserves_mass_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = fraccli(&["diffuse", "--config", data("diffuse.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let drift = value_after(&stdout(&o), "mass_drift");
    assert!(drift <= 1e-8, "{drift}");
    let plot = std::fs::read_to_string(dir.path().join("plot_data.csv")).unwrap();
    assert_eq!(plot.lines().next(), Some("t,norm_u,mass_re,mass_im"));
    assert_eq!(plot.lines().count(), 130);
}
