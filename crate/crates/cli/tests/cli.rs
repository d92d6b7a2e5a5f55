use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

use saext_core::deficiency::DeficiencyBasis;
use saext_core::extmap::dirichlet_u;
use saext_core::linalg::Mat2;

fn saext(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saext")).args(args).output().expect("spawn saext")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_json(p: &Path, v: &Value) {
    std::fs::write(p, serde_json::to_string(v).unwrap()).unwrap();
}

#[test]
fn dirichlet_spectrum_on_unit_interval() {
    let out = saext(&["spectrum", "--family", "dirichlet", "--emin", "0.1", "--emax", "30"]);
    let body = stdout_json(&out);
    let got: Vec<f64> =
        body["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    // (nπ/2)² for n = 1, 2, 3
    let want: Vec<f64> =
        (1..=3).map(|n| (n as f64 * std::f64::consts::FRAC_PI_2).powi(2)).collect();
    assert_eq!(got.len(), want.len(), "{got:?}");
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-6 * w, "{g} vs {w}");
    }
}

#[test]
fn basis_file_feeds_the_map() {
    let dir = tempfile::tempdir().unwrap();
    let basis_path = dir.path().join("basis.json");
    let out = saext(&["deficiency", "--potential", "/dev/null", "--out", path(&basis_path)]);
    // /dev/null is not a descriptor
    assert_eq!(out.status.code(), Some(2));

    let out = saext(&["deficiency", "--a", "1.0", "--out", path(&basis_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&basis_path).unwrap();
    let basis = DeficiencyBasis::from_json(serde_json::from_str(&text).unwrap()).unwrap();

    let u_path = dir.path().join("u.json");
    write_json(&u_path, &serde_json::to_value(dirichlet_u(&basis).unwrap()).unwrap());
    let body = stdout_json(&saext(&[
        "map",
        "--potential",
        path(&basis_path),
        "--direction",
        "u-to-bc",
        "--matrix",
        path(&u_path),
    ]));
    let ucal: Mat2 = serde_json::from_value(body["output"].clone()).unwrap();
    assert!(ucal.max_abs_diff(&Mat2::identity()) <= 1e-9, "{ucal:?}");

    let id_path = dir.path().join("id.json");
    write_json(&id_path, &json!({"rows": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}));
    let body = stdout_json(&saext(&[
        "map",
        "--potential",
        path(&basis_path),
        "--direction",
        "bc-to-u",
        "--matrix",
        path(&id_path),
    ]));
    let u: Mat2 = serde_json::from_value(body["output"].clone()).unwrap();
    assert!(u.max_abs_diff(dirichlet_u(&basis).unwrap().matrix()) <= 1e-9);
}

#[test]
fn swap_matrix_is_periodic() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    write_json(&m, &json!({"rows": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]}));
    let body = stdout_json(&saext(&["classify", "--matrix", path(&m)]));
    assert_eq!(body["name"], "periodic");
    assert_eq!(body["case"], "IV");
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    write_json(&m, &json!({"rows": [[[2, 0], [0, 0]], [[0, 0], [1, 0]]]}));
    for args in [
        vec!["classify", "--matrix", path(&m)],
        vec!["classify"],
        vec!["spectrum", "--family", "no-such-family"],
        vec!["spectrum", "--family", "dirichlet", "--emin", "5", "--emax", "1"],
        vec!["verify", "--samples", "0"],
        vec!["no-such-command"],
    ] {
        let out = saext(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["spectrum", "--family", "robin", "--alpha", "1", "--gamma", "2", "--beta-re", "0.5",
        "--emax", "40", "--threads", "3"];
    let a = saext(&args);
    let b = saext(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn csv_spectrum_writes_mode_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec.csv");
    let res = saext(&[
        "spectrum", "--family", "neumann", "--emin", "-1", "--emax", "12", "--format", "csv",
        "--out", path(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let table = std::fs::read_to_string(&out).unwrap();
    assert_eq!(table.lines().next(), Some("index,eigenvalue,degeneracy,residual"));
    // 0, (π/2)², π²
    assert_eq!(table.lines().count(), 4, "{table}");
    let mode = std::fs::read_to_string(dir.path().join("spec_mode1_0.csv")).unwrap();
    assert_eq!(mode.lines().next(), Some("x,re_f,im_f"));
    assert!(mode.lines().count() > 100);
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write_json(
        &cfg,
        &json!({
            "potential": {"kind": "zero"},
            "a": 1.0,
            "family": "dirichlet",
            "emin": 0.1,
            "emax": 10.0
        }),
    );
    let body = stdout_json(&saext(&["spectrum", "--config", path(&cfg)]));
    assert_eq!(body["eigenvalues"].as_array().unwrap().len(), 2);
    let body = stdout_json(&saext(&["spectrum", "--config", path(&cfg), "--emax", "30"]));
    assert_eq!(body["eigenvalues"].as_array().unwrap().len(), 3);

    write_json(&cfg, &json!({"no-such-key": 1}));
    assert_eq!(saext(&["spectrum", "--config", path(&cfg)]).status.code(), Some(2));
}

#[test]
fn verify_passes_with_few_samples() {
    let out = saext(&["verify", "--samples", "20"]);
    let body = stdout_json(&out);
    assert_eq!(body["failed"], 0);
}
