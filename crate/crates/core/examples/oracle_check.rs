// SPDX-License-Identifier: Apache-2.0

//! Replay a stochastic trajectory through the exact Fock-space dynamics and
//! report the largest deviation.
//!
//!     cargo run --release --example oracle_check -- [L] [p] [gamma] [t_max] [obc|pbc]

use monitored_fermions::ed::oracle_check;
use monitored_fermions::{Boundary, LatticeParams, TrajectoryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let sites: usize = arg(0, "8").parse()?;
    let exponent: f64 = arg(1, "1.5").parse()?;
    let gamma: f64 = arg(2, "1.0").parse()?;
    let t_max: f64 = arg(3, "2.0").parse()?;
    let boundary = match arg(4, "obc").as_str() {
        "pbc" => Boundary::Periodic,
        _ => Boundary::Open,
    };

    let lattice = LatticeParams::new(sites, exponent, gamma, std::f64::consts::PI, boundary);
    let mut config = TrajectoryConfig::new(lattice, t_max);
    config.seed = 7;
    let report = oracle_check(&config)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!("max deviation {:.3e}", report.max_deviation());
    Ok(())
}
