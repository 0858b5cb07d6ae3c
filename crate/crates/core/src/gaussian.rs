// SPDX-License-Identifier: Apache-2.0

//! Slater-determinant trajectory states and their observables.
//!
//! A state of `N` fermions on `L` sites is stored as an `L x N` matrix `U`
//! with orthonormal columns; the many-body state is
//! `Π_l (Σ_j U_jl c†_j) |0⟩`. Column operations that keep the span leave
//! the physical state unchanged, which is what the jump update relies on.
//!
//! The jump on bond `(i, j)` is `L = ½ e^{iθ n_j} ξ† ξ` with the quasi-mode
//! `ξ† = c†_i − i c†_j`, so `L†L = ½ ξ†ξ` is a projector and its
//! expectation lies in `[0, 1]`.

use std::ops::Range;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::linalg::{self, c64, I, ONE, ZERO};

/// Smallest overlap `|⟨a|U_j⟩|` accepted as a jump pivot.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Eigenvalues are clamped to `[ε, 1 − ε]` before the binary entropy.
pub const ENTROPY_CLAMP: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct SlaterState {
    orbitals: Mat<c64>,
}

impl SlaterState {
    /// One standard-basis orbital per occupied site.
    pub fn from_occupation(pattern: &[bool]) -> Result<Self> {
        let occupied: Vec<usize> = pattern.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        if occupied.is_empty() {
            return Err(Error::param("initial_pattern", "needs at least one occupied site"));
        }
        let mut u = Mat::<c64>::zeros(pattern.len(), occupied.len());
        for (col, &site) in occupied.iter().enumerate() {
            u[(site, col)] = ONE;
        }
        Ok(SlaterState { orbitals: u })
    }

    /// Any full-rank `L x N` matrix; its columns are orthonormalized.
    pub fn from_orbitals(orbitals: MatRef<'_, c64>) -> Result<Self> {
        if orbitals.ncols() == 0 || orbitals.ncols() > orbitals.nrows() {
            return Err(Error::param(
                "orbitals",
                format!("need 1 <= N <= L, got {}x{}", orbitals.nrows(), orbitals.ncols()),
            ));
        }
        Ok(SlaterState { orbitals: linalg::orthonormalize(orbitals)? })
    }

    pub fn sites(&self) -> usize {
        self.orbitals.nrows()
    }

    pub fn particles(&self) -> usize {
        self.orbitals.ncols()
    }

    pub fn orbitals(&self) -> MatRef<'_, c64> {
        self.orbitals.as_ref()
    }

    /// `G_mn = Σ_k conj(U_mk) U_nk`.
    pub fn correlation_matrix(&self) -> CorrelationMatrix {
        let u = self.orbitals.as_ref();
        let g = linalg::product(u.conjugate(), u.transpose());
        CorrelationMatrix { entries: g }
    }

    /// `U ← orth(K U)`, with `K = exp(−i h_eff δt)` precomputed by the caller.
    pub fn apply_propagator(&mut self, propagator: MatRef<'_, c64>) -> Result<()> {
        let mut evolved = Mat::zeros(self.sites(), self.particles());
        linalg::matmul_into(&mut evolved, propagator, self.orbitals.as_ref());
        self.orbitals = linalg::orthonormalize(evolved.as_ref())?;
        Ok(())
    }

    /// `⟨L†L⟩ = ½ Σ_j |⟨a|U_j⟩|²`.
    pub fn jump_expectation(&self, jump: &JumpOperator) -> f64 {
        let u = &self.orbitals;
        0.5 * (0..self.particles()).map(|c| jump.overlap(u, c).norm_sqr()).sum::<f64>()
    }

    /// Replace the state by `L|ψ⟩ / ‖L|ψ⟩‖`.
    ///
    /// The column with the largest quasi-mode overlap is used as the pivot;
    /// the remaining columns are made orthogonal to `a`, the pivot is
    /// replaced by `a/‖a‖`, and the feedback phase multiplies row `j` of the
    /// bond `(i, j)`.
    pub fn apply_jump(&mut self, jump: &JumpOperator) -> Result<()> {
        let n = self.particles();
        let u = &mut self.orbitals;
        let overlaps: Vec<c64> = (0..n).map(|c| jump.overlap(u, c)).collect();
        let (pivot, best) = overlaps
            .iter()
            .enumerate()
            .map(|(c, o)| (c, o.norm()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(best >= PIVOT_TOLERANCE) {
            return Err(Error::UnoccupiedQuasiMode { bond: jump.bond, max_overlap: best });
        }
        let o0 = overlaps[pivot];
        let l = u.nrows();
        for c in 0..n {
            if c == pivot {
                continue;
            }
            let f = overlaps[c] / o0;
            if f == ZERO {
                continue;
            }
            for r in 0..l {
                let v = u[(r, pivot)];
                u[(r, c)] -= f * v;
            }
        }
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        for r in 0..l {
            u[(r, pivot)] = ZERO;
        }
        u[(jump.left, pivot)] = c64::new(inv, 0.0);
        u[(jump.right, pivot)] = c64::new(0.0, -inv);
        if jump.theta != 0.0 {
            let phase = c64::from_polar(1.0, jump.theta);
            for c in 0..n {
                u[(jump.right, c)] *= phase;
            }
        }
        // move the pivot to the front so the column order follows the update
        if pivot != 0 {
            for r in 0..l {
                let tmp = u[(r, 0)];
                u[(r, 0)] = u[(r, pivot)];
                u[(r, pivot)] = tmp;
            }
        }
        self.orbitals = linalg::orthonormalize(self.orbitals.as_ref())?;
        Ok(())
    }

    /// `⟨n_i⟩ = Σ_k |U_ik|²`.
    pub fn density(&self) -> Vec<f64> {
        let u = &self.orbitals;
        (0..self.sites()).map(|i| (0..self.particles()).map(|k| u[(i, k)].norm_sqr()).sum()).collect()
    }

    /// Bipartite entropy of the sites in `subsystem` from the spectrum of
    /// the restricted correlation matrix.
    pub fn entanglement_entropy(&self, subsystem: Range<usize>) -> Result<f64> {
        check_subsystem(&subsystem, self.sites())?;
        if subsystem.is_empty() {
            return Ok(0.0);
        }
        let rows = self.orbitals.as_ref().subrows(subsystem.start, subsystem.len());
        // U_A U_Aᴴ is the transpose of G_A, same spectrum
        let block = linalg::product(rows, rows.adjoint());
        spectrum_entropy(block.as_ref())
    }

    pub fn classical_entropy(&self) -> f64 {
        classical_entropy(&self.density())
    }

    pub fn density_imbalance(&self) -> f64 {
        density_imbalance(&self.density())
    }

    /// `J = (i/L) Σ_n (G_{n,n+1} − G_{n+1,n})` with ring indexing.
    pub fn particle_current(&self) -> f64 {
        let u = &self.orbitals;
        let l = self.sites();
        let bonds = (0..l).map(|n| {
            let m = (n + 1) % l;
            (0..self.particles()).map(|k| u[(n, k)].conj() * u[(m, k)]).sum::<c64>()
        });
        ring_current(bonds, l)
    }

    pub fn observables(&self, time: f64) -> Result<ObservableSet> {
        let density = self.density();
        Ok(ObservableSet {
            time,
            entanglement: self.entanglement_entropy(default_subsystem(self.sites()))?,
            classical_entropy: classical_entropy(&density),
            imbalance: density_imbalance(&density),
            current: self.particle_current(),
            density,
        })
    }
}

/// `A = [1, L/4]` in 1-based sites.
pub fn default_subsystem(sites: usize) -> Range<usize> {
    0..sites / 4
}

fn check_subsystem(subsystem: &Range<usize>, sites: usize) -> Result<()> {
    if subsystem.end > sites || subsystem.start > subsystem.end {
        return Err(Error::param("subsystem", format!("{subsystem:?} not within 0..{sites}")));
    }
    Ok(())
}

/// Quasi-mode jump on measurement bond `(left, right)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpOperator {
    pub bond: usize,
    pub left: usize,
    pub right: usize,
    pub theta: f64,
}

impl JumpOperator {
    pub fn new(params: &LatticeParams, bond: usize) -> Result<Self> {
        let bonds = params.bonds();
        let &(left, right) = bonds
            .get(bond)
            .ok_or_else(|| Error::param("bond", format!("{bond} outside the {} measurement bonds", bonds.len())))?;
        Ok(JumpOperator { bond, left, right, theta: params.theta })
    }

    pub fn all(params: &LatticeParams) -> Vec<JumpOperator> {
        params
            .bonds()
            .into_iter()
            .enumerate()
            .map(|(bond, (left, right))| JumpOperator { bond, left, right, theta: params.theta })
            .collect()
    }

    /// Dense coefficients of `ξ† = Σ_k a_k c†_k`: `a_left = 1`, `a_right = −i`.
    pub fn a_vector(&self, sites: usize) -> Vec<c64> {
        let mut a = vec![ZERO; sites];
        a[self.left] = ONE;
        a[self.right] = -I;
        a
    }

    /// `⟨a|U_c⟩ = U_left,c + i U_right,c`.
    #[inline]
    fn overlap(&self, u: &Mat<c64>, c: usize) -> c64 {
        u[(self.left, c)] + I * u[(self.right, c)]
    }
}

/// Two-point function `G_mn = ⟨c†_m c_n⟩`.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub entries: Mat<c64>,
}

impl CorrelationMatrix {
    pub fn new(entries: Mat<c64>) -> Self {
        CorrelationMatrix { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).sum()
    }

    pub fn density(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let g = &self.entries;
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..=i {
                worst = worst.max((g[(i, j)] - g[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |(G² − G)_ij|`; zero for a pure Slater determinant.
    pub fn purity_defect(&self) -> f64 {
        let g = self.entries.as_ref();
        let g2 = linalg::product(g, g);
        linalg::max_abs_diff(g2.as_ref(), g)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(self.entries.as_ref())
    }

    /// `½ (G_ii + G_jj + i G_ij − i G_ji)` for the jump on bond `(i, j)`.
    pub fn jump_expectation(&self, jump: &JumpOperator) -> f64 {
        let g = &self.entries;
        let (i, j) = (jump.left, jump.right);
        (0.5 * (g[(i, i)] + g[(j, j)] + I * g[(i, j)] - I * g[(j, i)])).re
    }

    pub fn entanglement_entropy(&self, subsystem: Range<usize>) -> Result<f64> {
        check_subsystem(&subsystem, self.dim())?;
        if subsystem.is_empty() {
            return Ok(0.0);
        }
        let block = self.entries.as_ref().submatrix(subsystem.start, subsystem.start, subsystem.len(), subsystem.len());
        spectrum_entropy(block)
    }

    pub fn particle_current(&self) -> f64 {
        let l = self.dim();
        ring_current((0..l).map(|n| self.entries[(n, (n + 1) % l)]), l)
    }

    pub fn observables(&self, time: f64) -> Result<ObservableSet> {
        let density = self.density();
        Ok(ObservableSet {
            time,
            entanglement: self.entanglement_entropy(default_subsystem(self.dim()))?,
            classical_entropy: classical_entropy(&density),
            imbalance: density_imbalance(&density),
            current: self.particle_current(),
            density,
        })
    }
}

/// Observables recorded along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub time: f64,
    /// `S(L, L/4)`.
    pub entanglement: f64,
    pub classical_entropy: f64,
    /// `Δn = |N_left − N_right| / N_tot`.
    pub imbalance: f64,
    pub current: f64,
    pub density: Vec<f64>,
}

/// `s(λ) = −λ ln λ − (1 − λ) ln(1 − λ)` after clamping into `[ε, 1 − ε]`.
pub fn binary_entropy(lambda: f64) -> f64 {
    let x = lambda.clamp(ENTROPY_CLAMP, 1.0 - ENTROPY_CLAMP);
    -x * x.ln() - (1.0 - x) * (1.0 - x).ln()
}

fn spectrum_entropy(block: MatRef<'_, c64>) -> Result<f64> {
    Ok(linalg::hermitian_eigenvalues(block)?.into_iter().map(binary_entropy).sum())
}

/// Site-resolved binary entropy of the occupations, with `0 ln 0 = 0`.
pub fn classical_entropy(density: &[f64]) -> f64 {
    density
        .iter()
        .map(|&n| {
            if n <= 0.0 || n >= 1.0 {
                0.0
            } else {
                -n * n.ln() - (1.0 - n) * (1.0 - n).ln()
            }
        })
        .sum()
}

/// Left half is sites `0..L/2` (rounded down for odd `L`).
pub fn density_imbalance(density: &[f64]) -> f64 {
    let half = density.len() / 2;
    let left: f64 = density[..half].iter().sum();
    let right: f64 = density[half..].iter().sum();
    let total = left + right;
    if total <= 0.0 {
        return 0.0;
    }
    ((left - right).abs() / total).min(1.0)
}

fn ring_current(forward: impl Iterator<Item = c64>, sites: usize) -> f64 {
    // i (G_{n,n+1} − conj(G_{n,n+1})) = −2 Im G_{n,n+1}
    -2.0 * forward.map(|g| g.im).sum::<f64>() / sites as f64
}
