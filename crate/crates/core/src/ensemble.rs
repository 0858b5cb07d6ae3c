// SPDX-License-Identifier: Apache-2.0

//! Trajectory ensembles, steady-state averages and finite-size fits.
//!
//! Trajectory `i` of an ensemble uses the RNG stream `(master_seed, i)`.
//! Trajectories run on a bounded rayon pool; their summaries are collected
//! in index order and reduced sequentially, so the result does not depend
//! on the worker count or on completion order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{JumpSchedule, TrajectoryConfig, TrajectoryEngine, TrajectoryRecord};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "MONITORED_FERMIONS_WORKERS";

pub const DEFAULT_STEADY_WINDOW: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// `base.seed` is the master seed; `base.trajectory_index` is ignored.
    pub base: TrajectoryConfig,
    pub n_traj: usize,
    /// Fraction of the final snapshots averaged for steady-state values.
    pub steady_window_fraction: f64,
    /// Worker threads; `None` reads [`WORKERS_ENV`], then falls back to
    /// the rayon default.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl EnsembleConfig {
    pub fn new(base: TrajectoryConfig, n_traj: usize) -> Self {
        EnsembleConfig { base, n_traj, steady_window_fraction: DEFAULT_STEADY_WINDOW, workers: None }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.n_traj < 2 {
            return Err(Error::param("n_traj", format!("needs >= 2 trajectories for error bars, got {}", self.n_traj)));
        }
        let f = self.steady_window_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::param("steady_window_fraction", format!("must lie in (0, 1], got {f}")));
        }
        if self.workers == Some(0) {
            return Err(Error::param("workers", "must be >= 1"));
        }
        Ok(())
    }

    fn worker_count(&self) -> Result<Option<usize>> {
        if let Some(w) = self.workers {
            return Ok(Some(w));
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(w) if w > 0 => Ok(Some(w)),
                _ => Err(Error::param("workers", format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
            },
            Err(_) => Ok(None),
        }
    }
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanError {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanError {
    /// Two-pass estimate, summed in slice order. `stderr` is 0 for fewer
    /// than two values.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanError { mean: f64::NAN, stderr: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return MeanError { mean, stderr: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        MeanError { mean, stderr: (var / n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub time: f64,
    pub entanglement: MeanError,
    pub classical_entropy: MeanError,
    pub imbalance: MeanError,
    pub current: MeanError,
}

/// Steady-state value of one observable: window mean per trajectory, then
/// mean and standard error over trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStat {
    pub mean: f64,
    pub stderr: f64,
    pub per_trajectory: Vec<f64>,
}

impl SteadyStat {
    fn new(per_trajectory: Vec<f64>) -> Self {
        let MeanError { mean, stderr } = MeanError::from_values(&per_trajectory);
        SteadyStat { mean, stderr, per_trajectory }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadySummary {
    /// Number of final snapshots in the window.
    pub window: usize,
    pub entanglement: SteadyStat,
    pub classical_entropy: SteadyStat,
    pub imbalance: SteadyStat,
    pub current: SteadyStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub config: EnsembleConfig,
    pub series: Vec<TimePoint>,
    /// Ensemble-mean `⟨n_i⟩` per snapshot; empty unless
    /// `base.record_density` is set.
    pub density_series: Vec<Vec<f64>>,
    /// Ensemble-mean `⟨n_i⟩` over the steady window.
    pub steady_density: Vec<f64>,
    pub steady: SteadySummary,
    pub total_jumps: u64,
}

/// What one trajectory contributes to the reduction.
struct TrajectorySummary {
    times: Vec<f64>,
    scalars: Vec<[f64; 4]>,
    densities: Vec<Vec<f64>>,
    steady: [f64; 4],
    steady_density: Vec<f64>,
    jumps: u64,
}

fn window_len(snapshots: usize, fraction: f64) -> usize {
    ((snapshots as f64 * fraction).ceil() as usize).clamp(1, snapshots)
}

fn summarize(record: TrajectoryRecord, fraction: f64) -> TrajectorySummary {
    let snaps = &record.snapshots;
    let window = window_len(snaps.len(), fraction);
    let tail = &snaps[snaps.len() - window..];
    let scalar = |s: &crate::gaussian::ObservableSet| [s.entanglement, s.classical_entropy, s.imbalance, s.current];
    let mut steady = [0.0; 4];
    for s in tail {
        for (acc, v) in steady.iter_mut().zip(scalar(s)) {
            *acc += v;
        }
    }
    steady.iter_mut().for_each(|v| *v /= window as f64);
    let l = record.config.lattice.sites;
    let mut steady_density = vec![0.0; l];
    for s in tail {
        for (acc, v) in steady_density.iter_mut().zip(&s.density) {
            *acc += v;
        }
    }
    steady_density.iter_mut().for_each(|v| *v /= window as f64);
    TrajectorySummary {
        times: snaps.iter().map(|s| s.time).collect(),
        scalars: snaps.iter().map(scalar).collect(),
        densities: if record.config.record_density {
            snaps.iter().map(|s| s.density.clone()).collect()
        } else {
            Vec::new()
        },
        steady,
        steady_density,
        jumps: record.jump_log.len() as u64,
    }
}

pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleRecord> {
    config.validate()?;
    let engine = TrajectoryEngine::new(config.base.clone())?;
    let seed = config.base.seed;
    let fraction = config.steady_window_fraction;
    let job = |i: usize| -> Result<TrajectorySummary> {
        let record = engine.with_trajectory(seed, i as u64).run(JumpSchedule::Stochastic)?;
        log::debug!("trajectory {i} done: {} jumps", record.jump_log.len());
        Ok(summarize(record, fraction))
    };
    let results: Vec<Result<TrajectorySummary>> = match config.worker_count()? {
        Some(1) => (0..config.n_traj).map(job).collect(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::param("workers", e.to_string()))?
            .install(|| (0..config.n_traj).into_par_iter().map(job).collect()),
        None => (0..config.n_traj).into_par_iter().map(job).collect(),
    };
    let summaries = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(reduce(config.clone(), &summaries))
}

fn reduce(config: EnsembleConfig, summaries: &[TrajectorySummary]) -> EnsembleRecord {
    let first = &summaries[0];
    let n_snap = first.times.len();
    let column = |t: usize, k: usize| -> Vec<f64> { summaries.iter().map(|s| s.scalars[t][k]).collect() };
    let series = (0..n_snap)
        .map(|t| TimePoint {
            time: first.times[t],
            entanglement: MeanError::from_values(&column(t, 0)),
            classical_entropy: MeanError::from_values(&column(t, 1)),
            imbalance: MeanError::from_values(&column(t, 2)),
            current: MeanError::from_values(&column(t, 3)),
        })
        .collect();
    let mean_profile = |rows: &mut dyn Iterator<Item = &Vec<f64>>| -> Vec<f64> {
        let mut acc = vec![0.0; first.steady_density.len()];
        for row in rows {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        acc.iter().map(|v| v / summaries.len() as f64).collect()
    };
    let density_series = if first.densities.is_empty() {
        Vec::new()
    } else {
        (0..n_snap).map(|t| mean_profile(&mut summaries.iter().map(|s| &s.densities[t]))).collect()
    };
    let steady_density = mean_profile(&mut summaries.iter().map(|s| &s.steady_density));
    let stat = |k: usize| SteadyStat::new(summaries.iter().map(|s| s.steady[k]).collect());
    let steady = SteadySummary {
        window: window_len(n_snap, config.steady_window_fraction),
        entanglement: stat(0),
        classical_entropy: stat(1),
        imbalance: stat(2),
        current: stat(3),
    };
    EnsembleRecord {
        config,
        series,
        density_series,
        steady_density,
        steady,
        total_jumps: summaries.iter().map(|s| s.jumps).sum(),
    }
}

/// Straight-line least-squares fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Zero when the fit has no residual degrees of freedom.
    pub slope_stderr: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(Error::Fit(format!("need >= 2 paired points, got {n}")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit { slope, intercept, slope_stderr })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapsePoint {
    pub sites: usize,
    pub gamma: f64,
    pub scl_mean: f64,
    pub scl_err: f64,
}

/// One row of the collapsed table: `x = γL`, `y = S_cl / L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseRow {
    pub gamma_l: f64,
    pub scl_over_l: f64,
    pub err: f64,
    pub sites: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Log-log slope of `y` against `x` on the tail.
    pub slope: f64,
    pub stderr: f64,
    /// Amplitude of `y = c / x`, from the slope-fixed fit
    /// `ln c = mean(ln x + ln y)`.
    pub c: f64,
    pub points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collapse {
    pub rows: Vec<CollapseRow>,
    pub fit: Option<TailFit>,
    /// Why the tail fit was refused, when it was.
    pub refusal: Option<String>,
}

/// Collapse `S_cl(L) = L f(γL)` and fit the tail on the largest decade of
/// `γL`.
pub fn collapse_scan(points: &[CollapsePoint]) -> Result<Collapse> {
    for p in points {
        if !(p.scl_mean.is_finite() && p.scl_err.is_finite() && p.gamma.is_finite()) || p.scl_mean < 0.0 || p.sites == 0 {
            return Err(Error::Fit(format!("invalid collapse point {p:?}")));
        }
    }
    let mut sizes: Vec<usize> = points.iter().map(|p| p.sites).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::Fit(format!("need >= 3 distinct L, got {}", sizes.len())));
    }
    let mut rows: Vec<CollapseRow> = points
        .iter()
        .map(|p| {
            let l = p.sites as f64;
            CollapseRow { gamma_l: p.gamma * l, scl_over_l: p.scl_mean / l, err: p.scl_err / l, sites: p.sites, gamma: p.gamma }
        })
        .collect();
    rows.sort_by(|a, b| a.gamma_l.total_cmp(&b.gamma_l).then(a.sites.cmp(&b.sites)));

    let x_max = rows.iter().map(|r| r.gamma_l).fold(f64::NEG_INFINITY, f64::max);
    let tail: Vec<&CollapseRow> =
        rows.iter().filter(|r| r.gamma_l >= x_max / 10.0 && r.gamma_l > 0.0 && r.scl_over_l > 0.0).collect();
    if tail.len() < 3 {
        let reason = format!("only {} usable points in the tail decade", tail.len());
        return Ok(Collapse { rows, fit: None, refusal: Some(reason) });
    }
    let lx: Vec<f64> = tail.iter().map(|r| r.gamma_l.ln()).collect();
    let ly: Vec<f64> = tail.iter().map(|r| r.scl_over_l.ln()).collect();
    let line = least_squares(&lx, &ly)?;
    let ln_c = lx.iter().zip(&ly).map(|(x, y)| x + y).sum::<f64>() / lx.len() as f64;
    let fit = TailFit {
        slope: line.slope,
        stderr: line.slope_stderr,
        c: ln_c.exp(),
        points: tail.len(),
        x_min: tail.iter().map(|r| r.gamma_l).fold(f64::INFINITY, f64::min),
        x_max,
    };
    Ok(Collapse { rows, fit: Some(fit), refusal: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub stderr: f64,
    pub amplitude: f64,
}

/// Fit `S = A L^α` by least squares in `(ln L, ln S)`.
pub fn scaling_exponent_fit(points: &[(usize, f64)]) -> Result<PowerLawFit> {
    let mut sizes: Vec<usize> = points.iter().map(|p| p.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::Fit(format!("need >= 3 distinct sizes, got {}", sizes.len())));
    }
    if let Some(&(l, s)) = points.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite())) {
        return Err(Error::Fit(format!("entropy at L = {l} is {s}, must be positive")));
    }
    let lx: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let line = least_squares(&lx, &ly)?;
    Ok(PowerLawFit { exponent: line.slope, stderr: line.slope_stderr, amplitude: line.intercept.exp() })
}
