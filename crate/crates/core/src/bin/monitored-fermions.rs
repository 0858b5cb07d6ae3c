// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use monitored_fermions::config::parse_config_with_overrides;
use monitored_fermions::io::{execute, RunError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Subcommand {
    Spectrum,
    Trajectory,
    Ensemble,
    Sweep,
    Collapse,
    OracleCheck,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Monitored long-range free-fermion chains: spectra, trajectories,
/// ensembles, parameter sweeps, scaling collapse and exact cross-checks.
///
/// Worker threads default to all cores; set MONITORED_FERMIONS_WORKERS to
/// bound them.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    command: Subcommand,
    /// key=value config file; `#` starts a comment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set gamma=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.clone(), source })?,
        None => String::new(),
    };
    let mut overrides = cli.overrides;
    let command = cli.command.to_possible_value().expect("named variant").get_name().to_string();
    overrides.push(format!("command={command}"));
    if let Some(out) = cli.out {
        overrides.push(format!("out={}", out.display()));
    }
    if let Some(format) = cli.format {
        overrides.push(format!("format={}", format.to_possible_value().expect("named variant").get_name()));
    }
    let spec = parse_config_with_overrides(&text, &overrides)?;
    let outcome = execute(&spec)?;
    println!("{}", outcome.summary);
    for file in &outcome.files {
        log::info!("wrote {}", file.display());
    }
    Ok(())
}
