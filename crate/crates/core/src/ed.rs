// SPDX-License-Identifier: Apache-2.0

//! Brute-force many-body reference in the fixed-particle-number sector.
//!
//! Basis states are bit words with bit `j` set when site `j` is occupied,
//! ordered by increasing integer value. Fermion signs follow the
//! Jordan-Wigner convention `c_j |w⟩ = (−1)^{#occupied sites < j} |w − j⟩`,
//! so `|w⟩ = c†_{s1} c†_{s2} … |0⟩` with `s1 < s2 < …`.
//!
//! The oracle never samples: it replays a jump schedule recorded from the
//! Gaussian simulation. The jump operators and the effective Hamiltonian
//! are assembled from sector matrices (`L_n`, `L_n† L_n`) rather than from
//! the single-particle bond bookkeeping, and the propagator is obtained
//! from an eigendecomposition (Taylor series when that is ill-conditioned),
//! so none of the Gaussian code path is reused.

use std::collections::HashMap;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{default_subsystem, CorrelationMatrix, ObservableSet, SlaterState};
use crate::lattice::{build_h0, LatticeParams};
use crate::linalg::{self, c64, I, ONE, ZERO};
use crate::trajectory::{JumpSchedule, TrajectoryConfig, TrajectoryEngine};

pub const MAX_ORACLE_SITES: usize = 14;

/// Norm below which a forced jump is treated as impossible.
pub const JUMP_NORM_TOLERANCE: f64 = 1e-12;

/// Condition number of the eigenvector matrix above which the sector
/// exponential switches to the Taylor route.
const EIGEN_CONDITION_LIMIT: f64 = 1e4;

#[derive(Debug, Clone)]
pub struct FockBasis {
    sites: usize,
    particles: usize,
    states: Vec<u32>,
    index: HashMap<u32, usize>,
}

impl FockBasis {
    pub fn new(sites: usize, particles: usize) -> Result<Self> {
        if sites > MAX_ORACLE_SITES {
            return Err(Error::SectorTooLarge { sites, max_sites: MAX_ORACLE_SITES, dim: binomial(sites, particles) });
        }
        if particles > sites {
            return Err(Error::param("N", format!("{particles} particles on {sites} sites")));
        }
        let states: Vec<u32> = (0u32..1 << sites).filter(|w| w.count_ones() as usize == particles).collect();
        let index = states.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        Ok(FockBasis { sites, particles, states, index })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn words(&self) -> &[u32] {
        &self.states
    }

    pub fn index_of(&self, word: u32) -> Option<usize> {
        self.index.get(&word).copied()
    }

    pub fn occupation_word(pattern: &[bool]) -> u32 {
        pattern.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| 1u32 << i).sum()
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k.min(n - k)).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn parity_below(word: u32, site: usize) -> f64 {
    if (word & ((1u32 << site) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn annihilate(word: u32, site: usize) -> Option<(u32, f64)> {
    (word >> site & 1 == 1).then(|| (word & !(1 << site), parity_below(word, site)))
}

fn create(word: u32, site: usize) -> Option<(u32, f64)> {
    (word >> site & 1 == 0).then(|| (word | (1 << site), parity_below(word, site)))
}

/// `c†_m c_n |w⟩`, or `None` when it vanishes.
fn hop(word: u32, m: usize, n: usize) -> Option<(u32, f64)> {
    let (w1, s1) = annihilate(word, n)?;
    let (w2, s2) = create(w1, m)?;
    Some((w2, s1 * s2))
}

/// Sector matrix of the quadratic form `Σ_mn A_mn c†_m c_n`.
pub fn build_many_body(single: MatRef<'_, c64>, basis: &FockBasis) -> Result<Mat<c64>> {
    let l = basis.sites;
    if single.nrows() != l || single.ncols() != l {
        return Err(Error::param("h", format!("expected {l}x{l}, got {}x{}", single.nrows(), single.ncols())));
    }
    let d = basis.dim();
    let mut out = Mat::<c64>::zeros(d, d);
    for (col, &w) in basis.states.iter().enumerate() {
        for n in (0..l).filter(|&n| w >> n & 1 == 1) {
            for m in 0..l {
                let a = single[(m, n)];
                if a == ZERO {
                    continue;
                }
                if let Some((t, sign)) = hop(w, m, n) {
                    let row = basis.index[&t];
                    out[(row, col)] += a * sign;
                }
            }
        }
    }
    Ok(out)
}

pub fn number_operator(site: usize, basis: &FockBasis) -> Mat<c64> {
    let d = basis.dim();
    Mat::from_fn(d, d, |i, j| if i == j && basis.states[i] >> site & 1 == 1 { ONE } else { ZERO })
}

/// `exp(a)` on a sector, via `V diag(e^λ) V⁻¹`.
pub fn sector_exponential(a: MatRef<'_, c64>) -> Result<Mat<c64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    if let Ok(evd) = a.eigen() {
        let v = evd.U();
        let s = evd.S();
        let v_inv = v.partial_piv_lu().inverse();
        let cond = linalg::norm_1(v) * linalg::norm_1(v_inv.as_ref());
        if cond.is_finite() && cond < EIGEN_CONDITION_LIMIT {
            let scaled = Mat::from_fn(n, n, |i, j| v[(i, j)] * s.column_vector()[j].exp());
            return Ok(linalg::product(scaled.as_ref(), v_inv.as_ref()));
        }
    }
    Ok(taylor_exponential(a))
}

/// Scaling and squaring around a 30-term Taylor series.
fn taylor_exponential(a: MatRef<'_, c64>) -> Mat<c64> {
    let n = a.nrows();
    let norm = linalg::norm_1(a);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(squarings);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let mut sum = Mat::<c64>::identity(n, n);
    let mut term = Mat::<c64>::identity(n, n);
    for k in 1..=30 {
        let next = linalg::product(term.as_ref(), a.as_ref());
        term = Mat::from_fn(n, n, |i, j| next[(i, j)] / k as f64);
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = linalg::product(sum.as_ref(), sum.as_ref());
    }
    sum
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub amplitudes: Vec<c64>,
}

impl FockVector {
    pub fn basis_state(basis: &FockBasis, word: u32) -> Result<Self> {
        let idx = basis
            .index_of(word)
            .ok_or_else(|| Error::param("pattern", format!("word {word:b} is not in the sector")))?;
        let mut amplitudes = vec![ZERO; basis.dim()];
        amplitudes[idx] = ONE;
        Ok(FockVector { amplitudes })
    }

    /// Expand a Slater determinant: the amplitude of `|w⟩` is the minor of
    /// `U` on the occupied rows of `w`.
    pub fn from_slater(state: &SlaterState, basis: &FockBasis) -> Result<Self> {
        if state.sites() != basis.sites || state.particles() != basis.particles {
            return Err(Error::param("state", "does not match the Fock sector"));
        }
        let u = state.orbitals();
        let n = basis.particles;
        let amplitudes = basis
            .states
            .iter()
            .map(|&w| {
                let rows: Vec<usize> = (0..basis.sites).filter(|&j| w >> j & 1 == 1).collect();
                let minor = Mat::from_fn(n, n, |r, c| u[(rows[r], c)]);
                determinant(minor)
            })
            .collect();
        Ok(FockVector { amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scaled(mut self, factor: f64) -> Self {
        for z in &mut self.amplitudes {
            *z *= factor;
        }
        self
    }

    pub fn apply(&self, op: MatRef<'_, c64>) -> FockVector {
        let d = self.amplitudes.len();
        let amplitudes = (0..d).map(|i| (0..d).map(|j| op[(i, j)] * self.amplitudes[j]).sum()).collect();
        FockVector { amplitudes }
    }
}

fn determinant(mut m: Mat<c64>) -> c64 {
    let n = m.nrows();
    let mut det = ONE;
    for k in 0..n {
        let p = (k..n).max_by(|&a, &b| m[(a, k)].norm().total_cmp(&m[(b, k)].norm())).unwrap();
        if m[(p, k)] == ZERO {
            return ZERO;
        }
        if p != k {
            for c in 0..n {
                let t = m[(k, c)];
                m[(k, c)] = m[(p, c)];
                m[(p, c)] = t;
            }
            det = -det;
        }
        let pivot = m[(k, k)];
        det *= pivot;
        for r in k + 1..n {
            let f = m[(r, k)] / pivot;
            for c in k..n {
                let v = m[(k, c)];
                m[(r, c)] -= f * v;
            }
        }
    }
    det
}

/// `G_mn = ⟨ψ| c†_m c_n |ψ⟩`.
pub fn correlation(psi: &FockVector, basis: &FockBasis) -> CorrelationMatrix {
    let l = basis.sites;
    let mut g = Mat::<c64>::zeros(l, l);
    for (s, &w) in basis.states.iter().enumerate() {
        let amp = psi.amplitudes[s];
        if amp == ZERO {
            continue;
        }
        for n in (0..l).filter(|&n| w >> n & 1 == 1) {
            for m in 0..l {
                if let Some((t, sign)) = hop(w, m, n) {
                    g[(m, n)] += psi.amplitudes[basis.index[&t]].conj() * amp * sign;
                }
            }
        }
    }
    CorrelationMatrix::new(g)
}

/// Von Neumann entropy of the leftmost `sites_a` sites from the exact
/// reduced density matrix.
pub fn partial_trace_entropy(psi: &FockVector, basis: &FockBasis, sites_a: usize) -> Result<f64> {
    if sites_a > basis.sites {
        return Err(Error::param("subsystem", format!("{sites_a} sites of {}", basis.sites)));
    }
    if sites_a == 0 {
        return Ok(0.0);
    }
    let da = 1usize << sites_a;
    let mask = (da - 1) as u32;
    let mut by_rest: HashMap<u32, Vec<(usize, c64)>> = HashMap::new();
    for (s, &w) in basis.states.iter().enumerate() {
        by_rest.entry(w >> sites_a).or_default().push(((w & mask) as usize, psi.amplitudes[s]));
    }
    let mut rho = Mat::<c64>::zeros(da, da);
    for group in by_rest.values() {
        for &(a, x) in group {
            for &(b, y) in group {
                rho[(a, b)] += x * y.conj();
            }
        }
    }
    let eig = linalg::hermitian_eigenvalues(rho.as_ref())?;
    Ok(eig.into_iter().filter(|&p| p > 1e-300).map(|p| -p * p.ln()).sum())
}

/// All observables, with the entanglement entropy from the partial trace.
pub fn ed_observables(psi: &FockVector, basis: &FockBasis, time: f64) -> Result<ObservableSet> {
    let la = default_subsystem(basis.sites).len();
    if la == 0 {
        return Err(Error::param("L", "needs L >= 4 for the L/4 subsystem"));
    }
    let g = correlation(psi, basis);
    let mut obs = g.observables(time)?;
    obs.entanglement = partial_trace_entropy(psi, basis, la)?;
    Ok(obs)
}

/// Sector operators of the monitored chain.
#[derive(Debug, Clone)]
pub struct EdModel {
    pub basis: FockBasis,
    pub h0: Mat<c64>,
    /// `L_n = ½ e^{iθ n_right} ξ†_n ξ_n` per measurement bond.
    pub jumps: Vec<Mat<c64>>,
    pub h_eff: Mat<c64>,
    pub propagator: Mat<c64>,
}

impl EdModel {
    pub fn new(params: &LatticeParams, particles: usize, dt: f64) -> Result<Self> {
        params.validate()?;
        let basis = FockBasis::new(params.sites, particles)?;
        let h0 = build_many_body(build_h0(params)?.as_ref(), &basis)?;
        let l = params.sites;
        let d = basis.dim();
        let mut jumps = Vec::new();
        let mut loss = Mat::<c64>::zeros(d, d);
        for (left, right) in params.bonds() {
            let mut a = vec![ZERO; l];
            a[left] += ONE;
            a[right] += -I;
            let xi_xi = build_many_body(Mat::from_fn(l, l, |m, n| a[m] * a[n].conj()).as_ref(), &basis)?;
            let phase = Mat::from_fn(d, d, |i, j| {
                if i != j {
                    ZERO
                } else if basis.states[i] >> right & 1 == 1 {
                    c64::from_polar(1.0, params.theta)
                } else {
                    ONE
                }
            });
            let half = Mat::from_fn(d, d, |i, j| xi_xi[(i, j)] * 0.5);
            let jump = linalg::product(phase.as_ref(), half.as_ref());
            loss = &loss + &linalg::product(jump.adjoint(), jump.as_ref());
            jumps.push(jump);
        }
        let h_eff = Mat::from_fn(d, d, |i, j| h0[(i, j)] - I * (params.gamma / 2.0) * loss[(i, j)]);
        let generator = Mat::from_fn(d, d, |i, j| c64::new(0.0, -dt) * h_eff[(i, j)]);
        let propagator = sector_exponential(generator.as_ref())?;
        Ok(EdModel { basis, h0, jumps, h_eff, propagator })
    }

    /// Drift, normalize, then apply the listed jumps in order.
    pub fn ed_step(&self, psi: &FockVector, step: u64, bonds: &[usize]) -> Result<FockVector> {
        let drifted = psi.apply(self.propagator.as_ref());
        let n = drifted.norm();
        let mut psi = drifted.scaled(1.0 / n);
        for &bond in bonds {
            let op = self
                .jumps
                .get(bond)
                .ok_or_else(|| Error::param("schedule", format!("bond {bond} is not a measurement bond")))?;
            let next = psi.apply(op.as_ref());
            let norm = next.norm();
            if !(norm >= JUMP_NORM_TOLERANCE) {
                return Err(Error::ScheduleMismatch { step, bond, probability: norm * norm });
            }
            psi = next.scaled(1.0 / norm);
        }
        Ok(psi)
    }
}

/// Largest deviations between the Gaussian and the exact simulation.
#[derive(Debug, Clone, Default, Serialize)]
pub struct OracleReport {
    pub steps: u64,
    pub jumps: usize,
    pub correlation: f64,
    pub entanglement: f64,
    pub classical_entropy: f64,
    pub imbalance: f64,
    pub current: f64,
}

impl OracleReport {
    pub fn max_deviation(&self) -> f64 {
        [self.correlation, self.entanglement, self.classical_entropy, self.imbalance, self.current]
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn absorb(&mut self, g: f64, a: &ObservableSet, b: &ObservableSet) {
        self.correlation = self.correlation.max(g);
        self.entanglement = self.entanglement.max((a.entanglement - b.entanglement).abs());
        self.classical_entropy = self.classical_entropy.max((a.classical_entropy - b.classical_entropy).abs());
        self.imbalance = self.imbalance.max((a.imbalance - b.imbalance).abs());
        self.current = self.current.max((a.current - b.current).abs());
    }
}

/// Run a stochastic Gaussian trajectory, then replay its jump log through
/// both the Gaussian engine and the exact sector dynamics, comparing every
/// step.
pub fn oracle_check(config: &TrajectoryConfig) -> Result<OracleReport> {
    let engine = TrajectoryEngine::new(config.clone())?;
    let record = engine.run(JumpSchedule::Stochastic)?;
    replay(&engine, &record.jump_log)
}

/// Lockstep replay of `jump_log` through the Gaussian and exact dynamics.
pub fn replay(engine: &TrajectoryEngine, jump_log: &[crate::trajectory::JumpEvent]) -> Result<OracleReport> {
    let config = engine.config();
    let particles = config.initial_pattern.iter().filter(|&&b| b).count();
    let model = EdModel::new(&config.lattice, particles, config.dt)?;
    let basis = &model.basis;
    let mut runner = engine.runner(JumpSchedule::forced(jump_log.to_vec()))?;
    let mut psi = FockVector::basis_state(basis, FockBasis::occupation_word(&config.initial_pattern))?;
    let mut report = OracleReport { jumps: jump_log.len(), ..Default::default() };

    let compare = |report: &mut OracleReport, state: &SlaterState, psi: &FockVector, time: f64| -> Result<()> {
        let g_gauss = state.correlation_matrix();
        let g_exact = correlation(psi, basis);
        let dev = linalg::max_abs_diff(g_gauss.entries.as_ref(), g_exact.entries.as_ref());
        let a = state.observables(time)?;
        let b = ed_observables(psi, basis, time)?;
        report.absorb(dev, &a, &b);
        Ok(())
    };

    compare(&mut report, runner.state(), &psi, 0.0)?;
    let mut cursor = 0;
    for step in 0..engine.steps() {
        let start = cursor;
        while cursor < jump_log.len() && jump_log[cursor].step == step {
            cursor += 1;
        }
        let bonds: Vec<usize> = jump_log[start..cursor].iter().map(|e| e.bond).collect();
        runner.advance()?;
        psi = model.ed_step(&psi, step, &bonds)?;
        compare(&mut report, runner.state(), &psi, runner.time())?;
    }
    report.steps = engine.steps();
    Ok(report)
}

/// `c_site` on the full `2^L` Fock space.
pub fn full_space_annihilator(sites: usize, site: usize) -> Mat<c64> {
    let d = 1usize << sites;
    let mut m = Mat::<c64>::zeros(d, d);
    for w in 0..d as u32 {
        if let Some((t, sign)) = annihilate(w, site) {
            m[(t as usize, w as usize)] = c64::new(sign, 0.0);
        }
    }
    m
}
