// SPDX-License-Identifier: Apache-2.0

//! Drive a resumable parameter sweep from configuration text, the same path
//! the command-line binary takes. Running it twice skips finished points.
//!
//!     cargo run --release --example sweep -- [out_dir]

use monitored_fermions::io::execute;
use monitored_fermions::config::parse_config_with_overrides;

const CONFIG: &str = "\
command=sweep
L=16, 32
p=2
gamma=0.1, 0.5
bc=obc, pbc
dt=0.05
t_max=20
n_traj=8
record_every=20
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/sweep".to_string());
    let spec = parse_config_with_overrides(CONFIG, &[format!("out={out}")])?;
    let outcome = execute(&spec)?;
    println!("{}", outcome.summary);
    println!("manifest: {}", spec.out.join("manifest.csv").display());
    Ok(())
}
