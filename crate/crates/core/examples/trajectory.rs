// SPDX-License-Identifier: Apache-2.0

//! One stochastic trajectory from a domain wall. Writes the observable time
//! series, the jump record and the site-resolved density used for
//! heatmaps.
//!
//!     cargo run --release --example trajectory -- [out_dir] [L] [gamma] [theta]

use std::path::PathBuf;

use monitored_fermions::config::OutputFormat;
use monitored_fermions::io::write_trajectory;
use monitored_fermions::trajectory::JumpSchedule;
use monitored_fermions::{Boundary, LatticeParams, TrajectoryConfig, TrajectoryEngine};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().map_or("out/trajectory", String::as_str));
    let sites: usize = args.get(1).map_or(Ok(64), |s| s.parse())?;
    let gamma: f64 = args.get(2).map_or(Ok(0.5), |s| s.parse())?;
    let theta = args.get(3).and_then(|s| monitored_fermions::config::parse_angle(s)).unwrap_or(std::f64::consts::PI);

    let mut config = TrajectoryConfig::new(LatticeParams::new(sites, 5.0, gamma, theta, Boundary::Open), 40.0);
    config.dt = 0.05;
    config.record_every = 10;
    config.record_density = true;
    config.seed = 1;
    let record = TrajectoryEngine::new(config)?.run(JumpSchedule::Stochastic)?;

    std::fs::create_dir_all(&out)?;
    for file in write_trajectory(&out, &record, OutputFormat::Csv)? {
        println!("wrote {}", file.display());
    }
    let last = record.snapshots.last().expect("at least the initial snapshot");
    println!(
        "t={:.1} S_ent={:.4} S_cl={:.4} delta_n={:.4} jumps={}",
        last.time,
        last.entanglement,
        last.classical_entropy,
        last.imbalance,
        record.jump_log.len()
    );
    Ok(())
}
