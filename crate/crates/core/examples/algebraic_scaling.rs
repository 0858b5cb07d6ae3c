// SPDX-License-Identifier: Apache-2.0

//! Steady entanglement of an open chain with slowly decaying hopping,
//! fitted to `S = A L^α`.
//!
//!     cargo run --release --example algebraic_scaling -- [p] [n_traj] [t_max]

use std::f64::consts::PI;

use monitored_fermions::trajectory::domain_wall;
use monitored_fermions::{run_ensemble, scaling_exponent_fit, Boundary, EnsembleConfig, LatticeParams, TrajectoryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let exponent: f64 = args.first().map_or(Ok(1.1), |s| s.parse())?;
    let n_traj: usize = args.get(1).map_or(Ok(8), |s| s.parse())?;
    let t_max: f64 = args.get(2).map_or(Ok(100.0), |s| s.parse())?;

    let mut points = Vec::new();
    for sites in [32, 64, 128] {
        let mut base = TrajectoryConfig::new(LatticeParams::new(sites, exponent, 0.1, PI, Boundary::Open), t_max);
        base.dt = 0.05;
        base.record_every = 20;
        base.initial_pattern = domain_wall(sites);
        let s = run_ensemble(&EnsembleConfig::new(base, n_traj))?.steady.entanglement;
        println!("L={sites:<4} S_ent={:.4} ± {:.4}", s.mean, s.stderr);
        points.push((sites, s.mean));
    }
    let fit = scaling_exponent_fit(&points)?;
    println!("alpha = {:.3} ± {:.3} (3/2 - p = {:.2})", fit.exponent, fit.stderr, 1.5 - exponent);
    Ok(())
}
