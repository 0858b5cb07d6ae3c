// SPDX-License-Identifier: Apache-2.0

//! Open- and periodic-chain spectra of the effective Hamiltonian and the
//! distance from the open spectrum to the periodic one as the chain grows.
//!
//!     cargo run --release --example spectrum -- [p] [gamma]

use monitored_fermions::lattice::one_sided_hausdorff;
use monitored_fermions::{build_h_eff, spectrum, Boundary, LatticeParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let exponent: f64 = args.first().map_or(Ok(2.0), |s| s.parse())?;
    let gamma: f64 = args.get(1).map_or(Ok(2.0), |s| s.parse())?;

    println!("{:>5} {:>12} {:>12} {:>12}", "L", "max Im OBC", "max Im PBC", "d(OBC->PBC)");
    for sites in [20, 50, 100, 200] {
        let spec = |bc| -> Result<_, monitored_fermions::Error> {
            // The uniform -iγ/2 shift moves both spectra alike, so drop it.
            spectrum(&build_h_eff(&LatticeParams::new(sites, exponent, gamma, std::f64::consts::PI, bc), true)?)
        };
        let obc = spec(Boundary::Open)?;
        let pbc = spec(Boundary::Periodic)?;
        let d = one_sided_hausdorff(&obc.eigenvalues, &pbc.eigenvalues);
        println!("{sites:>5} {:>12.6} {:>12.6} {d:>12.6}", obc.max_imag(), pbc.max_imag());
    }
    Ok(())
}
