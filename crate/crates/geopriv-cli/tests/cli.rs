//! End-to-end checks of the `geopriv` binary: file formats, exit codes,
//! and byte-identical reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geopriv"))
}

fn write_grid_json(dir: &Path, cols: usize, rows: usize) -> PathBuf {
    let path = dir.join(format!("grid{cols}x{rows}.json"));
    fs::write(
        &path,
        format!(
            r#"{{"lat_min":33.9301,"lat_max":34.1996,"lon_min":-118.5354,"lon_max":-118.1010,"cols":{cols},"rows":{rows}}}"#
        ),
    )
    .unwrap();
    path
}

fn sample_tsv() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/gowalla_sample.tsv")
}

#[test]
fn sample_writes_expected_columns_and_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "sample",
                "--epsilon",
                "1.0",
                "--count",
                "100",
                "--seed",
                "42",
                "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = fs::read(&out_a).unwrap();
    assert_eq!(a, fs::read(&out_b).unwrap(), "same seed, same bytes");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("r_km,theta_rad,dx_km,dy_km\n"));
    assert_eq!(text.lines().count(), 101);
    // dx = r cos(theta) on every row.
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((f[2] - f[0] * f[1].cos()).abs() < 1e-7);
        assert!((f[3] - f[0] * f[1].sin()).abs() < 1e-7);
    }
}

#[test]
fn eval_loss_prints_the_closed_form() {
    let output = bin()
        .args(["eval-loss", "--epsilon", "2.0", "--loss", "linear"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let loss = v["expected_loss_km"].as_f64().unwrap();
    assert!((loss - 1.0).abs() < 1e-8);
}

#[test]
fn prior_solve_check_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid_json(dir.path(), 4, 3);
    let prior = dir.path().join("prior.csv");
    let stats = dir.path().join("stats.json");

    let status = bin()
        .args(["prior", "--checkins", sample_tsv(), "--user", "1001"])
        .arg("--grid")
        .arg(&grid)
        .arg("--out")
        .arg(&prior)
        .arg("--stats")
        .arg(&stats)
        .status()
        .unwrap();
    assert!(status.success());
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(stats["in_region"], 38);
    assert_eq!(stats["dropped"], 0);

    let mech = dir.path().join("mech.csv");
    let summary = dir.path().join("solution.json");
    let status = bin()
        .args(["solve-lp", "--ell", "linear:0.5"])
        .arg("--grid")
        .arg(&grid)
        .arg("--prior")
        .arg(&prior)
        .arg("--out")
        .arg(&mech)
        .arg("--summary")
        .arg(&summary)
        .status()
        .unwrap();
    assert!(status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(summary["objective_km"].as_f64().unwrap() > 0.0);

    // The solved mechanism passes its own privacy check (exit 0)...
    let status = bin()
        .args(["check-privacy", "--ell", "linear:0.5"])
        .arg("--mechanism")
        .arg(&mech)
        .arg("--grid")
        .arg(&grid)
        .status()
        .unwrap();
    assert!(status.success());
    // ...and fails a tighter budget (exit 1).
    let status = bin()
        .args(["check-privacy", "--ell", "linear:0.05"])
        .arg("--mechanism")
        .arg(&mech)
        .arg("--grid")
        .arg(&grid)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn build_lp_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid_json(dir.path(), 8, 6);
    let lp = dir.path().join("instance.lp");
    let output = bin()
        .args(["build-lp", "--ell", "linear:1.0"])
        .arg("--grid")
        .arg(&grid)
        .arg("--out")
        .arg(&lp)
        .output()
        .unwrap();
    assert!(output.status.success());
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(v["inequalities"], 108_288);
    assert_eq!(v["equalities"], 48);
    let text = fs::read_to_string(&lp).unwrap();
    assert!(text.contains("Subject To"));
}

#[test]
fn sweep_is_byte_identical_and_reportable() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "sweep",
                "--grid",
                "4x3",
                "--epsilon-start",
                "0.4",
                "--epsilon-stop",
                "1.6",
                "--epsilon-step",
                "0.4",
                "--seed",
                "42",
                "--checkins",
                sample_tsv(),
                "--users",
                "1001,1002",
                "--out-dir",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = fs::read(out_a.join("sweep.csv")).unwrap();
    let b = fs::read(out_b.join("sweep.csv")).unwrap();
    assert_eq!(a, b, "identical config + seed must reproduce bytes");

    let summary = dir.path().join("summary.json");
    let plot = dir.path().join("plot.csv");
    let status = bin()
        .arg("report")
        .arg("--rows")
        .arg(out_a.join("sweep.csv"))
        .arg("--summary")
        .arg(&summary)
        .arg("--plot")
        .arg(&plot)
        .status()
        .unwrap();
    assert!(status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(v["users"]["1001"]["usable_points"].as_u64().unwrap() == 4);
    let plot_text = fs::read_to_string(&plot).unwrap();
    assert!(plot_text.starts_with("epsilon,laplace_1001,lp_1001,laplace_1002,lp_1002"));
}

#[test]
fn remap_eval_runs_on_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "remap-eval",
            "--grid",
            "6x5",
            "--epsilon-start",
            "0.6",
            "--epsilon-stop",
            "1.2",
            "--epsilon-step",
            "0.6",
            "--out-dir",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(dir.path().join("remap.csv")).unwrap();
    assert!(text.starts_with("epsilon,user,bayes_loss_km,nearest_loss_km"));
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let bayes: f64 = fields[2].parse().unwrap();
        let nearest: f64 = fields[3].parse().unwrap();
        assert!(bayes <= nearest + 1e-9);
    }
}

#[test]
fn config_errors_exit_two() {
    let status = bin()
        .args(["eval-loss", "--epsilon", "1.0", "--loss", "nonsense"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bin()
        .args(["sweep", "--grid", "bogus", "--out-dir", "/tmp/never"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
