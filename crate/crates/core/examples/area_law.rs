// SPDX-License-Identifier: Apache-2.0

//! Steady-state entanglement against chain length with open and periodic
//! boundaries. Open chains pile particles onto one edge and stop
//! entangling; rings keep growing.
//!
//!     cargo run --release --example area_law -- [n_traj]

use std::f64::consts::PI;

use monitored_fermions::trajectory::domain_wall;
use monitored_fermions::{run_ensemble, Boundary, EnsembleConfig, LatticeParams, TrajectoryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_traj: usize = std::env::args().nth(1).map_or(Ok(32), |s| s.parse())?;
    println!("{:>4} {:>4} {:>18} {:>18} {:>10}", "bc", "L", "S_ent", "delta_n", "max|n-1/2|");
    for (boundary, gamma, t_max) in [(Boundary::Open, 0.5, 60.0), (Boundary::Periodic, 0.1, 80.0)] {
        for sites in [16, 32, 64] {
            let mut base = TrajectoryConfig::new(LatticeParams::new(sites, 5.0, gamma, PI, boundary), t_max);
            base.dt = 0.05;
            base.record_every = 20;
            base.initial_pattern = domain_wall(sites);
            let rec = run_ensemble(&EnsembleConfig::new(base, n_traj))?;
            let s = &rec.steady;
            let spread = rec.steady_density.iter().map(|n| (n - 0.5).abs()).fold(0.0, f64::max);
            println!(
                "{:>4} {sites:>4} {:>9.4} ± {:<6.4} {:>9.4} ± {:<6.4} {spread:>10.4}",
                boundary.tag(),
                s.entanglement.mean,
                s.entanglement.stderr,
                s.imbalance.mean,
                s.imbalance.stderr
            );
        }
    }
    Ok(())
}
