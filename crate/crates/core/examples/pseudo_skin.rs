// SPDX-License-Identifier: Apache-2.0

//! Without feedback the ensemble current on a ring is a time-step artifact:
//! it shrinks as the step does.
//!
//!     cargo run --release --example pseudo_skin -- [n_traj]

use monitored_fermions::trajectory::neel;
use monitored_fermions::{run_ensemble, Boundary, EnsembleConfig, LatticeParams, TrajectoryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_traj: usize = std::env::args().nth(1).map_or(Ok(32), |s| s.parse())?;
    let sites = 64;
    for dt in [0.1, 0.05, 0.01] {
        let mut base = TrajectoryConfig::new(LatticeParams::new(sites, 2.0, 2.0, 0.0, Boundary::Periodic), 60.0);
        base.dt = dt;
        base.record_every = (1.0 / dt).round() as u64;
        base.initial_pattern = neel(sites);
        let rec = run_ensemble(&EnsembleConfig::new(base, n_traj))?;
        let j = &rec.steady.current;
        let spread = rec.steady_density.iter().map(|n| (n - 0.5).abs()).fold(0.0, f64::max);
        println!("dt={dt:<5} J={:+.4} ± {:.4}  max|n-1/2|={spread:.4}", j.mean, j.stderr);
    }
    Ok(())
}
