// SPDX-License-Identifier: Apache-2.0

//! Quantum-trajectory simulation of a monitored one-dimensional free-fermion
//! chain with power-law hopping and feedback jumps.
//!
//! The pure state along a trajectory stays Gaussian, so it is stored as an
//! `L x N` orbital matrix ([`SlaterState`]). A brute-force Fock-space
//! reference ([`ed`]) replays the same jump record for small chains.

pub mod config;
pub mod ed;
pub mod ensemble;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod trajectory;

pub use config::{parse_config, RunSpec};
pub use ensemble::{collapse_scan, run_ensemble, scaling_exponent_fit, CollapsePoint, EnsembleConfig, EnsembleRecord};
pub use error::{Error, Result};
pub use gaussian::{CorrelationMatrix, JumpOperator, ObservableSet, SlaterState};
pub use lattice::{build_h0, build_h_eff, spectrum, Boundary, LatticeParams};
pub use trajectory::{JumpEvent, JumpSchedule, TrajectoryConfig, TrajectoryEngine, TrajectoryRecord};
