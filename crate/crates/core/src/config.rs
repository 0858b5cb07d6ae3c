// SPDX-License-Identifier: Apache-2.0

//! Strict `key=value` run configuration.
//!
//! One assignment per line, `#` starts a comment. Keys that accept a grid
//! take comma-separated lists. Overrides (`--set key=value`) are applied
//! after the file, so they win. Every parse or validation error names the
//! key and, for file values, the line.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use crate::ensemble::{EnsembleConfig, DEFAULT_STEADY_WINDOW};
use crate::error::Error;
use crate::lattice::{Boundary, LatticeParams};
use crate::trajectory::{domain_wall, neel, TrajectoryConfig, DEFAULT_DT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Trajectory,
    Ensemble,
    Sweep,
    Collapse,
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Trajectory => "trajectory",
            Command::Ensemble => "ensemble",
            Command::Sweep => "sweep",
            Command::Collapse => "collapse",
            Command::OracleCheck => "oracle-check",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "spectrum" => Command::Spectrum,
            "trajectory" => Command::Trajectory,
            "ensemble" => Command::Ensemble,
            "sweep" => Command::Sweep,
            "collapse" => Command::Collapse,
            "oracle-check" => Command::OracleCheck,
            _ => return None,
        })
    }

    /// Whether the command iterates over a parameter grid.
    pub fn takes_grid(self) -> bool {
        matches!(self, Command::Spectrum | Command::Sweep | Command::Collapse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    DomainWall,
    Neel,
    Pattern(Vec<bool>),
}

impl InitialState {
    pub fn pattern(&self, sites: usize) -> Vec<bool> {
        match self {
            InitialState::DomainWall => domain_wall(sites),
            InitialState::Neel => neel(sites),
            InitialState::Pattern(p) => p.clone(),
        }
    }

    fn text(&self) -> String {
        match self {
            InitialState::DomainWall => "domainwall".into(),
            InitialState::Neel => "neel".into(),
            InitialState::Pattern(p) => p.iter().map(|&b| if b { '1' } else { '0' }).collect(),
        }
    }
}

/// A configuration problem, located by key and (for file values) line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}, key `{}`: {}", self.key, self.message),
            None => write!(f, "key `{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Cartesian grid over the lattice and time-step parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub sites: Vec<usize>,
    pub exponent: Vec<f64>,
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
    pub boundary: Vec<Boundary>,
    pub dt: Vec<f64>,
}

/// One point of a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub sites: usize,
    pub exponent: f64,
    pub gamma: f64,
    pub theta: f64,
    pub boundary: Boundary,
    pub dt: f64,
}

impl Grid {
    /// Points in row-major order: `L` outermost, then `p`, `gamma`,
    /// `theta`, `bc`, `dt`.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &sites in &self.sites {
            for &exponent in &self.exponent {
                for &gamma in &self.gamma {
                    for &theta in &self.theta {
                        for &boundary in &self.boundary {
                            for &dt in &self.dt {
                                out.push(GridPoint { sites, exponent, gamma, theta, boundary, dt });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// A fully validated run request.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub grid: Grid,
    pub hopping: f64,
    pub max_range: Option<usize>,
    pub t_max: f64,
    pub initial_state: InitialState,
    pub seed: u64,
    pub record_every: u64,
    pub record_density: bool,
    pub n_traj: usize,
    pub steady_window: f64,
    pub workers: Option<usize>,
    /// Spectra of `h_eff` without the uniform decay term.
    pub drop_dissipation: bool,
    /// Oracle pass threshold.
    pub tolerance: f64,
    pub out: PathBuf,
    pub format: OutputFormat,
}

const LIST_KEYS: &[&str] = &["L", "p", "gamma", "theta", "bc", "dt"];
const KEYS: &[&str] = &[
    "command",
    "L",
    "p",
    "t",
    "gamma",
    "theta",
    "bc",
    "max_range",
    "dt",
    "t_max",
    "init",
    "seed",
    "record_every",
    "record_density",
    "n_traj",
    "steady_window",
    "workers",
    "drop_dissipation",
    "tolerance",
    "out",
    "format",
];

struct Entry {
    value: String,
    line: Option<usize>,
}

type Entries = BTreeMap<&'static str, Entry>;

fn err(key: &str, line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { key: key.to_string(), line, message: message.into() }
}

fn intern(key: &str, line: Option<usize>) -> Result<&'static str, ConfigError> {
    KEYS.iter().copied().find(|k| *k == key).ok_or_else(|| err(key, line, "unknown key"))
}

fn split_assignment(raw: &str, line: Option<usize>) -> Result<(&'static str, String), ConfigError> {
    let (key, value) = raw.split_once('=').ok_or_else(|| err(raw.trim(), line, "expected key=value"))?;
    let key = intern(key.trim(), line)?;
    let value = value.trim();
    if value.is_empty() {
        return Err(err(key, line, "empty value"));
    }
    Ok((key, value.to_string()))
}

/// Parse config text with no overrides.
pub fn parse_config(text: &str) -> Result<RunSpec, ConfigError> {
    parse_config_with_overrides(text, &[])
}

/// Parse config text, then apply `key=value` overrides on top.
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> Result<RunSpec, ConfigError> {
    let mut entries = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line = Some(i + 1);
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = split_assignment(content, line)?;
        if entries.contains_key(key) {
            return Err(err(key, line, "duplicate key"));
        }
        entries.insert(key, Entry { value, line });
    }
    for raw in overrides {
        let (key, value) = split_assignment(raw, None)?;
        entries.insert(key, Entry { value, line: None });
    }
    build(&entries)
}

fn scalar<T>(
    entries: &Entries,
    key: &'static str,
    default: T,
    parse: impl Fn(&str) -> Option<T>,
    expected: &str,
) -> Result<T, ConfigError> {
    match entries.get(key) {
        None => Ok(default),
        Some(e) => {
            if e.value.contains(',') && !LIST_KEYS.contains(&key) {
                return Err(err(key, e.line, "does not accept a list"));
            }
            parse(&e.value).ok_or_else(|| err(key, e.line, format!("expected {expected}, got `{}`", e.value)))
        }
    }
}

fn list<T>(
    entries: &Entries,
    key: &'static str,
    default: Vec<T>,
    parse: impl Fn(&str) -> Option<T>,
    expected: &str,
) -> Result<Vec<T>, ConfigError> {
    match entries.get(key) {
        None => Ok(default),
        Some(e) => e
            .value
            .split(',')
            .map(|item| {
                let item = item.trim();
                parse(item).ok_or_else(|| err(key, e.line, format!("expected {expected}, got `{item}`")))
            })
            .collect(),
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// `pi`, `2pi`, `0.5*pi`, `pi/2`, or plain radians.
pub fn parse_angle(s: &str) -> Option<f64> {
    let s = s.trim();
    let Some(idx) = s.find("pi") else {
        return parse_f64(s);
    };
    let coef = s[..idx].trim().trim_end_matches('*').trim();
    let coef = match coef {
        "" => 1.0,
        "-" => -1.0,
        c => parse_f64(c)?,
    };
    let rest = s[idx + 2..].trim();
    let den = if rest.is_empty() { 1.0 } else { parse_f64(rest.strip_prefix('/')?.trim())? };
    (den != 0.0).then(|| coef * PI / den)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn parse_boundary(s: &str) -> Option<Boundary> {
    match s.to_ascii_lowercase().as_str() {
        "obc" | "open" => Some(Boundary::Open),
        "pbc" | "periodic" => Some(Boundary::Periodic),
        _ => None,
    }
}

fn parse_initial(s: &str) -> Option<InitialState> {
    match s.to_ascii_lowercase().as_str() {
        "domainwall" | "domain_wall" => Some(InitialState::DomainWall),
        "neel" => Some(InitialState::Neel),
        bits if !bits.is_empty() && bits.chars().all(|c| c == '0' || c == '1') => {
            Some(InitialState::Pattern(bits.chars().map(|c| c == '1').collect()))
        }
        _ => None,
    }
}

fn line_of(entries: &Entries, key: &str) -> Option<usize> {
    entries.get(key).and_then(|e| e.line)
}

fn build(entries: &Entries) -> Result<RunSpec, ConfigError> {
    let command = scalar(entries, "command", Command::Ensemble, Command::parse, "a subcommand name")?;
    let grid = Grid {
        sites: list(entries, "L", vec![64], |s| s.parse().ok(), "a positive integer")?,
        exponent: list(entries, "p", vec![2.0], parse_f64, "a real number")?,
        gamma: list(entries, "gamma", vec![0.1], parse_f64, "a real number")?,
        theta: list(entries, "theta", vec![PI], parse_angle, "an angle (`pi`, `0`, radians)")?,
        boundary: list(entries, "bc", vec![Boundary::Open], parse_boundary, "`obc` or `pbc`")?,
        dt: list(entries, "dt", vec![DEFAULT_DT], parse_f64, "a real number")?,
    };
    let max_range = match entries.get("max_range") {
        None => None,
        Some(e) => Some(e.value.parse::<usize>().map_err(|_| err("max_range", e.line, "expected an integer"))?),
    };
    let spec = RunSpec {
        command,
        hopping: scalar(entries, "t", 1.0, parse_f64, "a real number")?,
        max_range,
        t_max: scalar(entries, "t_max", 50.0, parse_f64, "a real number")?,
        initial_state: scalar(entries, "init", InitialState::DomainWall, parse_initial, "`domainwall`, `neel` or a 0/1 string")?,
        seed: scalar(entries, "seed", 0, |s| s.parse().ok(), "an unsigned integer")?,
        record_every: scalar(entries, "record_every", 10, |s| s.parse().ok(), "a positive integer")?,
        record_density: scalar(entries, "record_density", false, parse_bool, "true or false")?,
        n_traj: scalar(entries, "n_traj", 100, |s| s.parse().ok(), "a positive integer")?,
        steady_window: scalar(entries, "steady_window", DEFAULT_STEADY_WINDOW, parse_f64, "a real number")?,
        workers: match entries.get("workers") {
            None => None,
            Some(e) => Some(e.value.parse::<usize>().ok().filter(|&w| w > 0).ok_or_else(|| err("workers", e.line, "expected a positive integer"))?),
        },
        drop_dissipation: scalar(entries, "drop_dissipation", true, parse_bool, "true or false")?,
        tolerance: scalar(entries, "tolerance", 1e-8, parse_f64, "a real number")?,
        out: PathBuf::from(scalar(entries, "out", "out".to_string(), |s| Some(s.to_string()), "a path")?),
        format: scalar(
            entries,
            "format",
            OutputFormat::Csv,
            |s| match s {
                "csv" => Some(OutputFormat::Csv),
                "json" => Some(OutputFormat::Json),
                _ => None,
            },
            "`csv` or `json`",
        )?,
        grid,
    };
    validate(&spec, entries)?;
    Ok(spec)
}

/// Which config key a library parameter name belongs to.
fn key_for(name: &str) -> &'static str {
    match name {
        "L" => "L",
        "p" => "p",
        "t" => "t",
        "gamma" => "gamma",
        "theta" => "theta",
        "max_range" => "max_range",
        "dt" => "dt",
        "t_max" => "t_max",
        "initial_pattern" => "init",
        "record_every" => "record_every",
        "n_traj" => "n_traj",
        "steady_window_fraction" => "steady_window",
        "workers" => "workers",
        _ => "command",
    }
}

fn validate(spec: &RunSpec, entries: &Entries) -> Result<(), ConfigError> {
    if !spec.command.takes_grid() {
        for key in LIST_KEYS {
            if let Some(e) = entries.get(key) {
                if e.value.contains(',') {
                    return Err(err(key, e.line, format!("`{}` takes a single value", spec.command.name())));
                }
            }
        }
    }
    if !(spec.tolerance > 0.0) {
        return Err(err("tolerance", line_of(entries, "tolerance"), "must be > 0"));
    }
    for point in spec.grid.points() {
        let ensemble = spec.ensemble_config(&point);
        let result = if spec.command == Command::Spectrum {
            spec.lattice(&point).validate()
        } else if matches!(spec.command, Command::Trajectory | Command::OracleCheck) {
            ensemble.base.validate()
        } else {
            ensemble.validate()
        };
        if let Err(Error::InvalidParameter { name, reason }) = result {
            let key = key_for(name);
            let reason = if name == "dt" && reason.contains("gamma*dt") { reason.replace("gamma*dt", "gamma·dt") } else { reason };
            return Err(err(key, line_of(entries, key), reason));
        } else if let Err(e) = result {
            return Err(err("command", None, e.to_string()));
        }
    }
    Ok(())
}

impl RunSpec {
    pub fn lattice(&self, point: &GridPoint) -> LatticeParams {
        let mut lattice = LatticeParams::new(point.sites, point.exponent, point.gamma, point.theta, point.boundary);
        lattice.hopping = self.hopping;
        lattice.max_range = self.max_range;
        lattice
    }

    pub fn trajectory_config(&self, point: &GridPoint) -> TrajectoryConfig {
        let mut config = TrajectoryConfig::new(self.lattice(point), self.t_max);
        config.dt = point.dt;
        config.initial_pattern = self.initial_state.pattern(point.sites);
        config.seed = self.seed;
        config.record_every = self.record_every;
        config.record_density = self.record_density;
        config
    }

    pub fn ensemble_config(&self, point: &GridPoint) -> EnsembleConfig {
        let mut config = EnsembleConfig::new(self.trajectory_config(point), self.n_traj);
        config.steady_window_fraction = self.steady_window;
        config.workers = self.workers;
        config
    }

    /// The single grid point of a non-grid command.
    pub fn point(&self) -> GridPoint {
        self.grid.points()[0]
    }

    /// Canonical `key=value` text of every effective setting. Parsing it
    /// back yields the same spec.
    pub fn effective_config(&self) -> String {
        fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
            items.iter().map(f).collect::<Vec<_>>().join(", ")
        }
        let g = &self.grid;
        let mut lines = vec![
            format!("command={}", self.command.name()),
            format!("L={}", join(&g.sites, |v| v.to_string())),
            format!("p={}", join(&g.exponent, |v| v.to_string())),
            format!("t={}", self.hopping),
            format!("gamma={}", join(&g.gamma, |v| v.to_string())),
            format!("theta={}", join(&g.theta, |v| v.to_string())),
            format!("bc={}", join(&g.boundary, |v| v.tag().to_string())),
        ];
        if let Some(r) = self.max_range {
            lines.push(format!("max_range={r}"));
        }
        lines.extend([
            format!("dt={}", join(&g.dt, |v| v.to_string())),
            format!("t_max={}", self.t_max),
            format!("init={}", self.initial_state.text()),
            format!("seed={}", self.seed),
            format!("record_every={}", self.record_every),
            format!("record_density={}", self.record_density),
            format!("n_traj={}", self.n_traj),
            format!("steady_window={}", self.steady_window),
        ]);
        if let Some(w) = self.workers {
            lines.push(format!("workers={w}"));
        }
        lines.extend([
            format!("drop_dissipation={}", self.drop_dissipation),
            format!("tolerance={}", self.tolerance),
            format!("out={}", self.out.display()),
            format!(
                "format={}",
                match self.format {
                    OutputFormat::Csv => "csv",
                    OutputFormat::Json => "json",
                }
            ),
        ]);
        lines.join("\n") + "\n"
    }
}
