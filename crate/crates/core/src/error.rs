// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("eigensolver failed to converge for a {dim}x{dim} matrix")]
    EigenNonConvergence { dim: usize },

    #[error("matrix exponential overflow (1-norm {norm:e})")]
    ExponentialOverflow { norm: f64 },

    #[error("orbital matrix became rank deficient (|R_kk| ratio {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("jump on unoccupied quasi-mode at bond {bond} (max overlap {max_overlap:e})")]
    UnoccupiedQuasiMode { bond: usize, max_overlap: f64 },

    #[error("forced jump at step {step} on bond {bond} has probability {probability:e}")]
    ScheduleMismatch { step: u64, bond: usize, probability: f64 },

    #[error("trajectory {trajectory} failed at step {step}: {source}")]
    Trajectory {
        trajectory: u64,
        step: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("Fock sector of dimension {dim} exceeds the oracle limit (L = {sites} > {max_sites})")]
    SectorTooLarge { sites: usize, max_sites: usize, dim: usize },

    #[error("fit refused: {0}")]
    Fit(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
