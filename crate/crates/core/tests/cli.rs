use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aggflow::harness::output::{read_raw, read_snapshot_field, TIMESERIES_HEADER};
use serde_json::Value;

fn aggflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aggflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn small(preset: &str, total_t: &str) -> Vec<String> {
    [
        "--preset",
        preset,
        "--set",
        "grid.nx=16",
        "--set",
        "grid.ny=16",
        "--set",
        "run.noise_max_mode=4",
        "--set",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([format!("run.total_t={total_t}")])
    .collect()
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap()
}

fn rows(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("timeseries.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn unknown_key_fails_before_creating_anything() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("run.cfg");
    fs::write(
        &cfg,
        "# spinodal\n[grid]\nnx = 16\n\n[solver]\ndtt = 1e-4\n",
    )
    .unwrap();
    let out = root.path().join("out");
    let o = aggflow(&["--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["kind"], "config");
    let msg = err["message"].as_str().unwrap();
    assert!(
        msg.contains("line 6") && msg.contains("solver.dtt"),
        "{msg}"
    );
    assert!(!out.exists());
}

#[test]
fn invalid_value_and_unknown_preset_are_rejected() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("out");
    let o = aggflow(&["--set", "norms.p=7"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"]
        .as_str()
        .unwrap()
        .contains("norms.p"));
    let o = aggflow(&["--preset", "bubbles"], &out);
    assert_eq!(o.status.code(), Some(2));
    let o = aggflow(&["--set", "grid.nx"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unwritable_output_directory_fails_fast() {
    let root = tempfile::tempdir().unwrap();
    let file = root.path().join("plain");
    fs::write(&file, "").unwrap();
    let o = aggflow(&strs(&small("spinodal", "1")), &file.join("sub"));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["kind"], "output_dir");
}

#[test]
fn equilibrium_run_writes_every_artifact() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("eq");
    let o = aggflow(&strs(&small("equilibrium", "3e-4")), &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert_eq!(text.lines().next(), Some(TIMESERIES_HEADER));
    let rows = rows(&out);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.len() == 9 && r[3] == rows[0][3]));
    assert_eq!(rows[0][7], "NaN");
    for step in [0, 3] {
        let (phi, meta) = read_snapshot_field(&out, "phi", step).unwrap();
        assert_eq!((meta.nx, meta.ny), (16, 16));
        assert!(phi.values().iter().all(|&p| p == 1.0));
        assert_eq!(
            read_raw(&out.join(format!("vx_{step:06}.f64")))
                .unwrap()
                .len(),
            256
        );
    }
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n_steps"], 3);
    for key in [
        "v_norm",
        "phi_norm",
        "y1_norm",
        "y2_norm",
        "energy",
        "mass",
        "div_residual",
        "max_abs_phi",
    ] {
        assert!(!report["norms"][key].is_null(), "{key}");
    }
    assert!(!out.join("error.json").exists());
}

#[test]
fn contraction_history_is_one_shorter_than_iterates() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("sp");
    let mut args = small("spinodal", "2e-3");
    args.extend(["--set", "run.snapshot_every=5"].map(String::from));
    let o = aggflow(&strs(&args), &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let windows = report["windows"].as_array().unwrap();
    assert!(!windows.is_empty());
    for w in windows {
        let iters = w["iterates"].as_u64().unwrap() as usize;
        assert_eq!(w["contraction_ratios"].as_array().unwrap().len(), iters - 1);
        assert_eq!(w["update_norms"].as_array().unwrap().len(), iters);
        assert_eq!(w["converged"], true);
    }
    let rows = rows(&out);
    assert_eq!(rows.len(), 21);
    for step in (0..=20).step_by(5) {
        assert!(out.join(format!("phi_{step:06}.f64")).exists());
        assert!(out.join(format!("{step:06}.meta.json")).exists());
    }
    assert!(!out.join("phi_000001.f64").exists());
}

#[test]
fn failed_run_leaves_error_json() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("fail");
    let mut args = small("spinodal", "1e-3");
    args.extend(["--set", "solver.picard_max_iter=2"].map(String::from));
    let o = aggflow(&strs(&args), &out);
    assert_eq!(o.status.code(), Some(1));
    let err: Value =
        serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(err, stderr_json(&o));
    assert!(!out.join("timeseries.csv").exists());
}

#[test]
fn overrides_take_precedence_over_the_file() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("run.cfg");
    fs::write(
        &cfg,
        "[grid]\nnx = 16\nny = 16\n[run]\npreset = spinodal\ntotal_t = 5e-4\n",
    )
    .unwrap();
    let out = root.path().join("o");
    let o = aggflow(
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--preset",
            "equilibrium",
            "--set",
            "run.total_t=2e-4",
        ],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["preset"], "equilibrium");
    assert_eq!(report["n_steps"], 2);
    assert_eq!(report["config"]["grid"]["nx"], 16);
}
