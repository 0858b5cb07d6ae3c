// SPDX-License-Identifier: Apache-2.0

//! Single-particle matrices of the power-law hopping chain.
//!
//! The bare hopping matrix couples every pair of sites `i != j` with
//! amplitude `t / d(i, j)^p`. Monitoring adds, on each measurement bond
//! `(i, i+1)`, an antisymmetric real hopping `±γ/4` and (optionally) the
//! on-site loss `−iγ/4` on both ends of the bond.

use std::f64::consts::PI;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[serde(rename = "obc")]
    Open,
    #[serde(rename = "pbc")]
    Periodic,
}

impl Boundary {
    pub fn tag(self) -> &'static str {
        match self {
            Boundary::Open => "obc",
            Boundary::Periodic => "pbc",
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Model parameters of the monitored chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub sites: usize,
    /// Hopping decay exponent `p`.
    pub exponent: f64,
    /// Hopping strength `t`.
    pub hopping: f64,
    /// Monitoring rate.
    pub gamma: f64,
    /// Feedback phase, in `[0, π]`.
    pub theta: f64,
    pub boundary: Boundary,
    /// Drop couplings beyond this distance. `Some(1)` gives the
    /// nearest-neighbour (Hatano-Nelson) limit.
    pub max_range: Option<usize>,
}

impl LatticeParams {
    pub fn new(sites: usize, exponent: f64, gamma: f64, theta: f64, boundary: Boundary) -> Self {
        LatticeParams { sites, exponent, hopping: 1.0, gamma, theta, boundary, max_range: None }
    }

    pub fn with_max_range(mut self, range: usize) -> Self {
        self.max_range = Some(range);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::param("L", format!("need at least 2 sites, got {}", self.sites)));
        }
        if !(self.exponent.is_finite() && self.exponent > 0.0) {
            return Err(Error::param("p", format!("must be finite and > 0, got {}", self.exponent)));
        }
        if !self.hopping.is_finite() {
            return Err(Error::param("t", "must be finite"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::param("gamma", format!("must be finite and >= 0, got {}", self.gamma)));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::param("theta", format!("must lie in [0, pi], got {}", self.theta)));
        }
        if self.max_range == Some(0) {
            return Err(Error::param("max_range", "must be >= 1"));
        }
        Ok(())
    }

    /// `p <= 1`: the dispersion diverges in the thermodynamic limit.
    pub fn singular_dispersion(&self) -> bool {
        self.exponent <= 1.0
    }

    pub fn distance(&self, i: usize, j: usize) -> usize {
        let d = i.abs_diff(j);
        match self.boundary {
            Boundary::Open => d,
            Boundary::Periodic => d.min(self.sites - d),
        }
    }

    /// Measurement bonds as 0-based `(i, i+1)` site pairs. OBC has `L − 1`
    /// bonds, PBC has `L` with the last one wrapping to site 0.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let l = self.sites;
        match self.boundary {
            Boundary::Open => (0..l - 1).map(|i| (i, i + 1)).collect(),
            Boundary::Periodic => (0..l).map(|i| (i, (i + 1) % l)).collect(),
        }
    }

    pub fn bond_count(&self) -> usize {
        match self.boundary {
            Boundary::Open => self.sites - 1,
            Boundary::Periodic => self.sites,
        }
    }
}

/// An `L x L` single-particle operator.
#[derive(Debug, Clone)]
pub struct SingleParticleMatrix {
    pub entries: Mat<c64>,
    pub hermitian: bool,
    pub boundary: Boundary,
}

impl SingleParticleMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    /// Largest `|h_ij − conj(h_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let h = &self.entries;
        let mut worst = 0.0f64;
        for i in 0..h.nrows() {
            for j in 0..=i {
                worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.entries[(i, i)]).sum()
    }
}

/// Hopping matrix of the bare Hamiltonian. Each unordered pair is visited
/// once, so under PBC the antipodal pair of an even ring gets a single
/// coupling `t / (L/2)^p`.
pub fn build_h0(params: &LatticeParams) -> Result<SingleParticleMatrix> {
    params.validate()?;
    let l = params.sites;
    let mut h = Mat::<c64>::zeros(l, l);
    for i in 0..l {
        for j in i + 1..l {
            let d = params.distance(i, j);
            if params.max_range.is_some_and(|r| d > r) {
                continue;
            }
            let amp = params.hopping / (d as f64).powf(params.exponent);
            h[(i, j)] = c64::new(amp, 0.0);
            h[(j, i)] = c64::new(amp, 0.0);
        }
    }
    Ok(SingleParticleMatrix { entries: h, hermitian: true, boundary: params.boundary })
}

/// Effective non-Hermitian single-particle matrix. With
/// `drop_overall_dissipation` the diagonal loss is omitted, which only
/// shifts the spectrum.
pub fn build_h_eff(params: &LatticeParams, drop_overall_dissipation: bool) -> Result<SingleParticleMatrix> {
    let mut h = build_h0(params)?;
    let q = params.gamma / 4.0;
    let m = &mut h.entries;
    for (a, b) in params.bonds() {
        m[(a, b)] += c64::new(q, 0.0);
        m[(b, a)] -= c64::new(q, 0.0);
        if !drop_overall_dissipation {
            m[(a, a)] -= I * q;
            m[(b, b)] -= I * q;
        }
    }
    h.hermitian = params.gamma == 0.0;
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    pub eigenvalues: Vec<c64>,
    pub boundary: Boundary,
}

/// All eigenvalues of `h`, sorted by `(re, im)`.
pub fn spectrum(h: &SingleParticleMatrix) -> Result<ComplexSpectrum> {
    let mut eigenvalues = if h.hermitian {
        linalg::hermitian_eigenvalues(h.as_ref())?.into_iter().map(|e| c64::new(e, 0.0)).collect()
    } else {
        linalg::eigenvalues(h.as_ref())?
    };
    if eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenNonConvergence { dim: h.dim() });
    }
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ComplexSpectrum { eigenvalues, boundary: h.boundary })
}

/// `max_{a in from} min_{b in to} |a − b|`.
pub fn one_sided_hausdorff(from: &[c64], to: &[c64]) -> f64 {
    from.iter()
        .map(|a| to.iter().map(|b| (a - b).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Group velocity `−2 Σ_{m=1}^{cutoff} m sin(mk) / m^p` of the power-law
/// dispersion, truncated at `cutoff` hops. For `p <= 2` the result keeps
/// depending on the cutoff.
pub fn mode_velocity(k: f64, exponent: f64, cutoff: usize) -> f64 {
    -2.0 * (1..=cutoff.max(1))
        .map(|m| {
            let m = m as f64;
            m * (m * k).sin() / m.powf(exponent)
        })
        .sum::<f64>()
}

/// Hop ranges actually present on the lattice: `L − 1` (OBC) or `L / 2` (PBC).
pub fn default_velocity_cutoff(sites: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Open => sites.saturating_sub(1).max(1),
        Boundary::Periodic => (sites / 2).max(1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Right,
    Left,
}

/// Momentum weight `|g(k)|²` of the two-site quasi-mode, `(1 ∓ sin k) / 2`.
pub fn quasimode_weight(k: f64, direction: Direction) -> f64 {
    match direction {
        Direction::Right => (1.0 - k.sin()) / 2.0,
        Direction::Left => (1.0 + k.sin()) / 2.0,
    }
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}
