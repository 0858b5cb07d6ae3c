// SPDX-License-Identifier: Apache-2.0

//! End-to-end runs of the command-line binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monitored-fermions"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn spectrum_csv_has_schema_and_one_row_per_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "L=10, 20\np=2.0\ngamma=2.0\nbc=obc, pbc\n");
    let out = dir.path().join("spec");
    let res = run(&["spectrum", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("re,im,bc,L,p,gamma"));
    assert_eq!(lines.count(), 2 * (10 + 20));
    assert!(!csv.contains('\r'));
    let echo = fs::read_to_string(out.join("effective_config.txt")).unwrap();
    assert!(echo.contains("command=spectrum\n"));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "L=16\n# comment line\ngamma=-1\n");
    let res = run(&["ensemble", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("gamma") && err.contains("line 3"), "{err}");

    let res = run(&["trajectory", "--set", "L=64", "--set", "dt=0.2", "--set", "gamma=3.0"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("0.6"));

    let res = run(&["trajectory", "--set", "bogus=1"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn oracle_check_passes_and_reports_mismatch_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "L=8\np=2.0\ngamma=0.5\ntheta=pi\ndt=0.01\nt_max=0.5\nseed=7\n");
    let ok = run(&["oracle-check", "--config", &cfg, "--out", dir.path().join("a").to_str().unwrap()]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    for label in ["G ", "S_ent ", "S_cl ", "delta_n ", "J "] {
        assert!(stdout.contains(label), "missing {label}: {stdout}");
    }
    let strict = run(&[
        "oracle-check",
        "--config",
        &cfg,
        "--set",
        "tolerance=1e-300",
        "--out",
        dir.path().join("b").to_str().unwrap(),
    ]);
    assert_eq!(strict.status.code(), Some(3));
}

#[test]
fn ensemble_outputs_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ens");
    let cfg = write_config(
        dir.path(),
        &format!(
            "L=12\np=2\ngamma=0.5\nbc=pbc\ndt=0.05\nt_max=1\nn_traj=4\nrecord_every=2\nrecord_density=true\nout={}\n",
            out.display()
        ),
    );
    let files = ["ensemble.csv", "steady_density.csv", "density.csv", "steady.json", "effective_config.txt"];
    assert!(run(&["ensemble", "--config", &cfg]).status.success());
    let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    let res = run(&["ensemble", "--config", &cfg, "--set", "workers=3"]);
    assert!(res.status.success());
    for (f, bytes) in files.iter().zip(&first) {
        if *f == "effective_config.txt" {
            continue;
        }
        assert_eq!(&fs::read(out.join(f)).unwrap(), bytes, "{f} changed between runs");
    }
    let header = String::from_utf8(first[0].clone()).unwrap();
    assert!(header.starts_with("time,S_ent_mean,S_ent_stderr,S_cl_mean,S_cl_stderr,delta_n_mean"));
}

#[test]
fn sweep_writes_manifest_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let cfg = write_config(dir.path(), "L=8\ngamma=0.1, 0.2\ndt=0.05\nt_max=0.5\nn_traj=2\n");
    let args = ["sweep", "--config", &cfg, "--out", out.to_str().unwrap()];
    let first = run(&args);
    assert!(first.status.success());
    assert!(String::from_utf8_lossy(&first.stdout).contains("2 computed, 0 skipped"));
    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 3);

    // Drop the second point: only it is recomputed.
    let truncated: Vec<&str> = manifest.lines().take(2).collect();
    fs::write(out.join("manifest.csv"), truncated.join("\n") + "\n").unwrap();
    let second = run(&args);
    assert!(String::from_utf8_lossy(&second.stdout).contains("1 computed, 1 skipped"));
    assert_eq!(fs::read_to_string(out.join("manifest.csv")).unwrap(), manifest);
}

#[test]
fn trajectory_and_collapse_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj");
    let res = run(&[
        "trajectory",
        "--set",
        "L=8",
        "--set",
        "t_max=1",
        "--set",
        "record_density=true",
        "--set",
        "init=neel",
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("trajectory.json")).unwrap()).unwrap();
    assert!(json["snapshots"].as_array().unwrap().len() > 1);

    let out = dir.path().join("collapse");
    let res = run(&[
        "collapse",
        "--set",
        "L=8,12,16",
        "--set",
        "gamma=0.5,1",
        "--set",
        "p=5",
        "--set",
        "dt=0.05",
        "--set",
        "t_max=1",
        "--set",
        "n_traj=2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let table = fs::read_to_string(out.join("collapse.csv")).unwrap();
    assert!(table.starts_with("gammaL,Scl_over_L,err,L,gamma\n"));
    assert_eq!(table.lines().count(), 7);
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert!(fit.get("slope").is_some() && fit.get("c").is_some() && fit.get("stderr").is_some());
}
