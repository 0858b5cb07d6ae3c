// SPDX-License-Identifier: Apache-2.0

//! Command dispatch and file outputs.
//!
//! CSV files use `{:.16e}` (17 significant digits) and `\n` line endings.
//! Nothing time- or host-dependent is written, so reruns of the same spec
//! produce byte-identical files. Every output directory gets
//! `effective_config.txt`, from which the run can be reproduced.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Command, ConfigError, GridPoint, OutputFormat, RunSpec};
use crate::ed::{oracle_check, OracleReport};
use crate::ensemble::{collapse_scan, run_ensemble, Collapse, CollapsePoint, EnsembleRecord};
use crate::error::Error;
use crate::gaussian::ObservableSet;
use crate::lattice::{build_h_eff, spectrum};
use crate::trajectory::{JumpSchedule, TrajectoryEngine, TrajectoryRecord};

pub const EFFECTIVE_CONFIG: &str = "effective_config.txt";
pub const MANIFEST: &str = "manifest.csv";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid parameter: {0}")]
    Invalid(Error),
    #[error("{0}")]
    Runtime(Error),
    #[error("oracle mismatch: max deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    OracleMismatch { deviation: f64, tolerance: f64 },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    /// 0 success, 1 validation, 2 runtime, 3 oracle mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Invalid(_) => 1,
            RunError::Runtime(_) | RunError::Io { .. } => 2,
            RunError::OracleMismatch { .. } => 3,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => RunError::Invalid(e),
            other => RunError::Runtime(other),
        }
    }
}

/// Files written by a run, plus a human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf, RunError> {
    fs::write(path, contents).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, RunError> {
    let text = serde_json::to_string_pretty(value).expect("serializable output") + "\n";
    write_file(path, &text)
}

fn create_dir(path: &Path) -> Result<(), RunError> {
    fs::create_dir_all(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// Run `spec` and write its outputs under `spec.out`.
pub fn execute(spec: &RunSpec) -> Result<RunOutcome, RunError> {
    create_dir(&spec.out)?;
    let echo = write_file(&spec.out.join(EFFECTIVE_CONFIG), &spec.effective_config())?;
    let mut outcome = match spec.command {
        Command::Spectrum => run_spectrum(spec)?,
        Command::Trajectory => run_trajectory(spec)?,
        Command::Ensemble => {
            let record = run_ensemble(&spec.ensemble_config(&spec.point()))?;
            let files = write_ensemble(&spec.out, &record, spec.format)?;
            RunOutcome { files, summary: steady_line(&record) }
        }
        Command::Sweep => run_sweep(spec)?,
        Command::Collapse => run_collapse(spec)?,
        Command::OracleCheck => run_oracle(spec)?,
    };
    outcome.files.insert(0, echo);
    Ok(outcome)
}

#[derive(Serialize)]
struct SpectrumRow {
    re: f64,
    im: f64,
    bc: &'static str,
    #[serde(rename = "L")]
    sites: usize,
    p: f64,
    gamma: f64,
}

fn run_spectrum(spec: &RunSpec) -> Result<RunOutcome, RunError> {
    let mut rows = Vec::new();
    for point in spec.grid.points() {
        let h = build_h_eff(&spec.lattice(&point), spec.drop_dissipation)?;
        for z in spectrum(&h)?.eigenvalues {
            rows.push(SpectrumRow {
                re: z.re,
                im: z.im,
                bc: point.boundary.tag(),
                sites: point.sites,
                p: point.exponent,
                gamma: point.gamma,
            });
        }
    }
    let file = match spec.format {
        OutputFormat::Csv => {
            let mut s = String::from("re,im,bc,L,p,gamma\n");
            for r in &rows {
                writeln!(s, "{},{},{},{},{},{}", num(r.re), num(r.im), r.bc, r.sites, num(r.p), num(r.gamma)).unwrap();
            }
            write_file(&spec.out.join("spectrum.csv"), &s)?
        }
        OutputFormat::Json => write_json(&spec.out.join("spectrum.json"), &rows)?,
    };
    Ok(RunOutcome { files: vec![file], summary: format!("{} eigenvalues written", rows.len()) })
}

fn observables_csv(snapshots: &[ObservableSet]) -> String {
    let mut s = String::from("time,S_ent,S_cl,delta_n,J\n");
    for o in snapshots {
        writeln!(s, "{},{},{},{},{}", num(o.time), num(o.entanglement), num(o.classical_entropy), num(o.imbalance), num(o.current))
            .unwrap();
    }
    s
}

fn density_csv<'a>(rows: impl Iterator<Item = (f64, &'a [f64])>) -> String {
    let mut s = String::from("time,site,n\n");
    for (t, density) in rows {
        for (i, n) in density.iter().enumerate() {
            writeln!(s, "{},{},{}", num(t), i, num(*n)).unwrap();
        }
    }
    s
}

fn run_trajectory(spec: &RunSpec) -> Result<RunOutcome, RunError> {
    let engine = TrajectoryEngine::new(spec.trajectory_config(&spec.point()))?;
    let record = engine.run(JumpSchedule::Stochastic)?;
    let files = write_trajectory(&spec.out, &record, spec.format)?;
    let last = record.snapshots.last().expect("initial snapshot");
    let summary = format!(
        "{} steps, {} jumps; final S_ent={:.6} S_cl={:.6} delta_n={:.6} J={:.6}",
        engine.steps(),
        record.jump_log.len(),
        last.entanglement,
        last.classical_entropy,
        last.imbalance,
        last.current
    );
    Ok(RunOutcome { files, summary })
}

pub fn write_trajectory(dir: &Path, record: &TrajectoryRecord, format: OutputFormat) -> Result<Vec<PathBuf>, RunError> {
    if format == OutputFormat::Json {
        return Ok(vec![write_json(&dir.join("trajectory.json"), record)?]);
    }
    let mut files = vec![write_file(&dir.join("trajectory.csv"), &observables_csv(&record.snapshots))?];
    let mut jumps = String::from("step,bond\n");
    for e in &record.jump_log {
        writeln!(jumps, "{},{}", e.step, e.bond).unwrap();
    }
    files.push(write_file(&dir.join("jumps.csv"), &jumps)?);
    if let Some(history) = record.density_history() {
        files.push(write_file(&dir.join("density.csv"), &density_csv(history.into_iter()))?);
    }
    Ok(files)
}

#[derive(Serialize)]
struct SteadyOutput<'a> {
    steady: &'a crate::ensemble::SteadySummary,
    steady_density: &'a [f64],
    total_jumps: u64,
}

pub fn write_ensemble(dir: &Path, record: &EnsembleRecord, format: OutputFormat) -> Result<Vec<PathBuf>, RunError> {
    if format == OutputFormat::Json {
        return Ok(vec![write_json(&dir.join("ensemble.json"), record)?]);
    }
    let mut s = String::from(
        "time,S_ent_mean,S_ent_stderr,S_cl_mean,S_cl_stderr,delta_n_mean,delta_n_stderr,J_mean,J_stderr\n",
    );
    for p in &record.series {
        let cols = [p.entanglement, p.classical_entropy, p.imbalance, p.current];
        let body: Vec<String> = cols.iter().flat_map(|m| [num(m.mean), num(m.stderr)]).collect();
        writeln!(s, "{},{}", num(p.time), body.join(",")).unwrap();
    }
    let mut files = vec![write_file(&dir.join("ensemble.csv"), &s)?];
    let mut profile = String::from("site,n\n");
    for (i, n) in record.steady_density.iter().enumerate() {
        writeln!(profile, "{},{}", i, num(*n)).unwrap();
    }
    files.push(write_file(&dir.join("steady_density.csv"), &profile)?);
    if !record.density_series.is_empty() {
        let rows = record.series.iter().zip(&record.density_series).map(|(p, d)| (p.time, d.as_slice()));
        files.push(write_file(&dir.join("density.csv"), &density_csv(rows))?);
    }
    let steady = SteadyOutput {
        steady: &record.steady,
        steady_density: &record.steady_density,
        total_jumps: record.total_jumps,
    };
    files.push(write_json(&dir.join("steady.json"), &steady)?);
    Ok(files)
}

fn steady_line(record: &EnsembleRecord) -> String {
    let s = &record.steady;
    format!(
        "steady: S_ent={:.6}±{:.6} S_cl={:.6}±{:.6} delta_n={:.6}±{:.6} J={:.6}±{:.6}",
        s.entanglement.mean,
        s.entanglement.stderr,
        s.classical_entropy.mean,
        s.classical_entropy.stderr,
        s.imbalance.mean,
        s.imbalance.stderr,
        s.current.mean,
        s.current.stderr
    )
}

const MANIFEST_HEADER: &str = "index,L,p,gamma,theta,bc,dt,status,dir,\
S_ent_mean,S_ent_stderr,S_cl_mean,S_cl_stderr,delta_n_mean,delta_n_stderr,J_mean,J_stderr";

fn point_key(index: usize, p: &GridPoint) -> String {
    format!("{},{},{},{},{},{},{}", index, p.sites, num(p.exponent), num(p.gamma), num(p.theta), p.boundary.tag(), num(p.dt))
}

fn manifest_row(key: &str, dir: &str, record: Option<&EnsembleRecord>) -> String {
    match record {
        Some(r) => {
            let s = &r.steady;
            let stats = [&s.entanglement, &s.classical_entropy, &s.imbalance, &s.current];
            let cols: Vec<String> = stats.iter().flat_map(|m| [num(m.mean), num(m.stderr)]).collect();
            format!("{key},ok,{dir},{}", cols.join(","))
        }
        None => format!("{key},failed,{dir},,,,,,,,"),
    }
}

/// Completed rows of an existing manifest, keyed by their parameter
/// columns.
fn read_manifest(path: &Path) -> Vec<(String, String)> {
    let Ok(text) = fs::read_to_string(path) else {
        return Vec::new();
    };
    text.lines()
        .skip(1)
        .filter_map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            (cols.len() > 8 && cols[7] == "ok").then(|| (cols[..7].join(","), line.to_string()))
        })
        .collect()
}

fn write_manifest(path: &Path, rows: &[Option<String>]) -> Result<(), RunError> {
    let mut s = String::from(MANIFEST_HEADER);
    s.push('\n');
    for row in rows.iter().flatten() {
        s.push_str(row);
        s.push('\n');
    }
    let tmp = path.with_extension("csv.tmp");
    write_file(&tmp, &s)?;
    fs::rename(&tmp, path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// One ensemble per grid point, indexed by `manifest.csv`. Points already
/// marked `ok` with identical parameters are skipped; a failing point is
/// marked `failed` and the grid continues.
fn run_sweep(spec: &RunSpec) -> Result<RunOutcome, RunError> {
    sweep_with(spec, |point| run_ensemble(&spec.ensemble_config(point)))
}

fn sweep_with(
    spec: &RunSpec,
    run_point: impl Fn(&GridPoint) -> crate::error::Result<EnsembleRecord>,
) -> Result<RunOutcome, RunError> {
    let manifest = spec.out.join(MANIFEST);
    let done = read_manifest(&manifest);
    let points = spec.grid.points();
    let mut rows: Vec<Option<String>> = vec![None; points.len()];
    let (mut skipped, mut computed, mut failed) = (0, 0, 0);
    let mut files = Vec::new();
    for (index, point) in points.iter().enumerate() {
        let key = point_key(index, point);
        let dir_name = format!("point_{index:04}");
        if let Some((_, line)) = done.iter().find(|(k, _)| *k == key) {
            rows[index] = Some(line.clone());
            skipped += 1;
            continue;
        }
        let dir = spec.out.join(&dir_name);
        create_dir(&dir)?;
        log::info!("sweep point {index}: {key}");
        match run_point(point) {
            Ok(record) => {
                files.extend(write_ensemble(&dir, &record, spec.format)?);
                rows[index] = Some(manifest_row(&key, &dir_name, Some(&record)));
                computed += 1;
            }
            Err(e) => {
                log::error!("sweep point {index} failed: {e}");
                files.push(write_file(&dir.join("error.txt"), &format!("{e}\n"))?);
                rows[index] = Some(manifest_row(&key, &dir_name, None));
                failed += 1;
            }
        }
        write_manifest(&manifest, &rows)?;
    }
    write_manifest(&manifest, &rows)?;
    files.insert(0, manifest);
    Ok(RunOutcome { files, summary: format!("{computed} computed, {skipped} skipped, {failed} failed") })
}

#[derive(Serialize)]
struct FitOutput {
    slope: Option<f64>,
    c: Option<f64>,
    stderr: Option<f64>,
    points: usize,
    x_min: Option<f64>,
    x_max: Option<f64>,
    refusal: Option<String>,
}

/// Ensembles over the `L x gamma` grid, then the collapse and tail fit of
/// the steady classical entropy.
fn run_collapse(spec: &RunSpec) -> Result<RunOutcome, RunError> {
    let g = &spec.grid;
    for (key, n) in [("p", g.exponent.len()), ("theta", g.theta.len()), ("bc", g.boundary.len()), ("dt", g.dt.len())] {
        if n != 1 {
            return Err(ConfigError { key: key.into(), line: None, message: "collapse scans only L and gamma".into() }.into());
        }
    }
    let mut points = Vec::new();
    for point in g.points() {
        log::info!("collapse point L={} gamma={}", point.sites, point.gamma);
        let record = run_ensemble(&spec.ensemble_config(&point))?;
        let s = &record.steady.classical_entropy;
        points.push(CollapsePoint { sites: point.sites, gamma: point.gamma, scl_mean: s.mean, scl_err: s.stderr });
    }
    let collapse = collapse_scan(&points)?;
    let files = write_collapse(&spec.out, &points, &collapse, spec.format)?;
    let summary = match &collapse.fit {
        Some(f) => format!("tail slope {:.4} ± {:.4}, c = {:.4} ({} points)", f.slope, f.stderr, f.c, f.points),
        None => format!("tail fit refused: {}", collapse.refusal.as_deref().unwrap_or("")),
    };
    Ok(RunOutcome { files, summary })
}

pub fn write_collapse(
    dir: &Path,
    points: &[CollapsePoint],
    collapse: &Collapse,
    format: OutputFormat,
) -> Result<Vec<PathBuf>, RunError> {
    let fit = FitOutput {
        slope: collapse.fit.map(|f| f.slope),
        c: collapse.fit.map(|f| f.c),
        stderr: collapse.fit.map(|f| f.stderr),
        points: collapse.fit.map_or(0, |f| f.points),
        x_min: collapse.fit.map(|f| f.x_min),
        x_max: collapse.fit.map(|f| f.x_max),
        refusal: collapse.refusal.clone(),
    };
    if format == OutputFormat::Json {
        #[derive(Serialize)]
        struct All<'a> {
            points: &'a [CollapsePoint],
            rows: &'a [crate::ensemble::CollapseRow],
            fit: FitOutput,
        }
        return Ok(vec![write_json(&dir.join("collapse.json"), &All { points, rows: &collapse.rows, fit })?]);
    }
    let mut p = String::from("L,gamma,S_cl_mean,S_cl_err\n");
    for pt in points {
        writeln!(p, "{},{},{},{}", pt.sites, num(pt.gamma), num(pt.scl_mean), num(pt.scl_err)).unwrap();
    }
    let mut c = String::from("gammaL,Scl_over_L,err,L,gamma\n");
    for r in &collapse.rows {
        writeln!(c, "{},{},{},{},{}", num(r.gamma_l), num(r.scl_over_l), num(r.err), r.sites, num(r.gamma)).unwrap();
    }
    Ok(vec![
        write_file(&dir.join("points.csv"), &p)?,
        write_file(&dir.join("collapse.csv"), &c)?,
        write_json(&dir.join("fit.json"), &fit)?,
    ])
}

fn run_oracle(spec: &RunSpec) -> Result<RunOutcome, RunError> {
    let report: OracleReport = oracle_check(&spec.trajectory_config(&spec.point()))?;
    let file = write_json(&spec.out.join("oracle.json"), &report)?;
    let summary = format!(
        "steps {} jumps {}\nG {:.3e}\nS_ent {:.3e}\nS_cl {:.3e}\ndelta_n {:.3e}\nJ {:.3e}",
        report.steps,
        report.jumps,
        report.correlation,
        report.entanglement,
        report.classical_entropy,
        report.imbalance,
        report.current
    );
    let deviation = report.max_deviation();
    if !(deviation <= spec.tolerance) {
        log::error!("{summary}");
        return Err(RunError::OracleMismatch { deviation, tolerance: spec.tolerance });
    }
    Ok(RunOutcome { files: vec![file], summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn csv_numbers_have_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn exit_codes() {
        let invalid: RunError = Error::param("gamma", "bad").into();
        assert_eq!(invalid.exit_code(), 1);
        let runtime: RunError = Error::RankDeficient { ratio: 0.0 }.into();
        assert_eq!(runtime.exit_code(), 2);
        assert_eq!(RunError::OracleMismatch { deviation: 1.0, tolerance: 0.1 }.exit_code(), 3);
    }

    #[test]
    fn sweep_marks_failed_points_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "command=sweep\nL=8\ngamma=0.1,0.2,0.3\ndt=0.05\nt_max=0.5\nn_traj=2\nout={}",
            dir.path().display()
        );
        let spec = parse_config(&text).unwrap();
        let flaky = |point: &GridPoint| {
            if point.gamma == 0.2 {
                Err(Error::RankDeficient { ratio: 0.0 })
            } else {
                run_ensemble(&spec.ensemble_config(point))
            }
        };
        let out = sweep_with(&spec, flaky).unwrap();
        assert_eq!(out.summary, "2 computed, 0 skipped, 1 failed");
        let manifest = fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
        let status: Vec<&str> = manifest.lines().skip(1).map(|l| l.split(',').nth(7).unwrap()).collect();
        assert_eq!(status, ["ok", "failed", "ok"]);
        assert!(dir.path().join("point_0001/error.txt").exists());

        let out = sweep_with(&spec, |p: &GridPoint| run_ensemble(&spec.ensemble_config(p))).unwrap();
        assert_eq!(out.summary, "1 computed, 2 skipped, 0 failed");
        let again = fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
        assert_eq!(again.lines().count(), 4);
        assert!(again.lines().skip(1).all(|l| l.split(',').nth(7) == Some("ok")));
    }

    #[test]
    fn manifest_key_round_trip() {
        let spec = parse_config("command=sweep\nL=8\ngamma=0.1,0.2\ndt=0.05").unwrap();
        let pts = spec.grid.points();
        let key = point_key(1, &pts[1]);
        let line = manifest_row(&key, "point_0001", None);
        assert_eq!(line.split(',').count(), MANIFEST_HEADER.split(',').count());
        assert!(line.starts_with(&key));
    }
}
