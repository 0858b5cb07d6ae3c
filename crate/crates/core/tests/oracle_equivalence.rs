// SPDX-License-Identifier: Apache-2.0

//! Gaussian simulation against the exact Fock-sector reference.

use std::f64::consts::PI;

use faer::Mat;
use monitored_fermions::ed::{self, correlation, ed_observables, partial_trace_entropy, EdModel, FockBasis, FockVector};
use monitored_fermions::gaussian::default_subsystem;
use monitored_fermions::linalg::{self, c64};
use monitored_fermions::trajectory::JumpSchedule;
use monitored_fermions::{
    run_ensemble, Boundary, EnsembleConfig, JumpOperator, LatticeParams, SlaterState, TrajectoryConfig, TrajectoryEngine,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-8;

fn random_state(sites: usize, particles: usize, seed: u64) -> SlaterState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Mat::from_fn(sites, particles, |_, _| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    SlaterState::from_orbitals(m.as_ref()).unwrap()
}

fn config(sites: usize, exponent: f64, gamma: f64, theta: f64, boundary: Boundary, t_max: f64) -> TrajectoryConfig {
    let mut c = TrajectoryConfig::new(LatticeParams::new(sites, exponent, gamma, theta, boundary), t_max);
    c.seed = 7;
    c
}

#[test]
fn replay_matches_for_reference_point() {
    let report = ed::oracle_check(&config(8, 2.0, 0.5, PI, Boundary::Open, 2.0)).unwrap();
    assert_eq!(report.steps, 200);
    assert!(report.max_deviation() < TOL, "{report:?}");
}

#[test]
fn replay_matches_across_boundaries_and_phases() {
    for (l, p, gamma, theta, bc) in [
        (6, 1.2, 2.0, PI, Boundary::Periodic),
        (8, 3.0, 1.0, 0.0, Boundary::Periodic),
        (7, 0.8, 3.0, 1.1, Boundary::Open),
        (8, 1.5, 4.0, PI, Boundary::Open),
    ] {
        let mut c = config(l, p, gamma, theta, bc, 1.0);
        c.dt = 0.02;
        c.initial_pattern = monitored_fermions::trajectory::neel(l);
        let report = ed::oracle_check(&c).unwrap();
        assert!(report.jumps > 0, "no jumps for L={l}");
        assert!(report.max_deviation() < TOL, "L={l} p={p} bc={bc:?}: {report:?}");
    }
}

#[test]
fn entanglement_of_random_slater_states() {
    let basis = FockBasis::new(8, 4).unwrap();
    for seed in 0..5 {
        let state = random_state(8, 4, seed);
        let psi = FockVector::from_slater(&state, &basis).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let exact = partial_trace_entropy(&psi, &basis, 2).unwrap();
        let gaussian = state.entanglement_entropy(default_subsystem(8)).unwrap();
        assert!((exact - gaussian).abs() < TOL, "seed {seed}: {exact} vs {gaussian}");
        let g = correlation(&psi, &basis);
        let dev = linalg::max_abs_diff(g.entries.as_ref(), state.correlation_matrix().entries.as_ref());
        assert!(dev < TOL);
        let obs = ed_observables(&psi, &basis, 0.0).unwrap();
        let reference = state.observables(0.0).unwrap();
        assert!((obs.classical_entropy - reference.classical_entropy).abs() < TOL);
        assert!((obs.current - reference.current).abs() < TOL);
    }
}

#[test]
fn jump_operators_match_on_random_states() {
    let params = LatticeParams::new(6, 2.0, 1.0, PI, Boundary::Periodic);
    let model = EdModel::new(&params, 3, 0.01).unwrap();
    for seed in 0..4 {
        let state = random_state(6, 3, 100 + seed);
        let psi = FockVector::from_slater(&state, &model.basis).unwrap();
        for jump in JumpOperator::all(&params) {
            let lifted = &model.jumps[jump.bond];
            let out = psi.apply(lifted.as_ref());
            let exact_probability = out.norm().powi(2);
            assert!((exact_probability - state.jump_expectation(&jump)).abs() < 1e-12);

            let mut jumped = state.clone();
            jumped.apply_jump(&jump).unwrap();
            let normalized = FockVector { amplitudes: out.amplitudes.iter().map(|z| z / out.norm()).collect() };
            let dev = linalg::max_abs_diff(
                correlation(&normalized, &model.basis).entries.as_ref(),
                jumped.correlation_matrix().entries.as_ref(),
            );
            assert!(dev < TOL, "bond {}: {dev}", jump.bond);
        }
    }
}

#[test]
fn exact_evolution_stays_gaussian() {
    let params = LatticeParams::new(8, 2.0, 0.5, PI, Boundary::Open);
    let model = EdModel::new(&params, 4, 0.05).unwrap();
    let mut psi = FockVector::basis_state(&model.basis, 0b0000_1111).unwrap();
    for step in 0..40u64 {
        let bonds: Vec<usize> = if step % 5 == 4 { vec![(step as usize / 5) % 7] } else { Vec::new() };
        psi = match model.ed_step(&psi, step, &bonds) {
            Ok(next) => next,
            Err(_) => model.ed_step(&psi, step, &[]).unwrap(),
        };
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!(correlation(&psi, &model.basis).purity_defect() < TOL);
    }
}

/// Ensemble-mean density from the Gaussian runner against the exact
/// replay of every member's jump record.
#[test]
fn ensemble_mean_density_matches_exact_replay() {
    let mut base = config(8, 2.0, 1.0, PI, Boundary::Open, 1.0);
    base.dt = 0.02;
    base.record_every = 10;
    base.record_density = true;
    let mut ens = EnsembleConfig::new(base.clone(), 6);
    ens.workers = Some(2);
    let record = run_ensemble(&ens).unwrap();

    let engine = TrajectoryEngine::new(base.clone()).unwrap();
    let model = EdModel::new(&base.lattice, 4, base.dt).unwrap();
    let snapshots = record.density_series.len();
    let mut exact = vec![vec![0.0; 8]; snapshots];
    for i in 0..ens.n_traj {
        let member = engine.with_trajectory(base.seed, i as u64);
        let log = member.run(JumpSchedule::Stochastic).unwrap().jump_log;
        let mut psi = FockVector::basis_state(&model.basis, FockBasis::occupation_word(&base.initial_pattern)).unwrap();
        let mut cursor = 0;
        let mut snap = 0;
        let mut accumulate = |psi: &FockVector, snap: usize| {
            for (acc, n) in exact[snap].iter_mut().zip(correlation(psi, &model.basis).density()) {
                *acc += n / ens.n_traj as f64;
            }
        };
        accumulate(&psi, snap);
        for step in 0..engine.steps() {
            let start = cursor;
            while cursor < log.len() && log[cursor].step == step {
                cursor += 1;
            }
            let bonds: Vec<usize> = log[start..cursor].iter().map(|e| e.bond).collect();
            psi = model.ed_step(&psi, step, &bonds).unwrap();
            if (step + 1) % base.record_every == 0 {
                snap += 1;
                accumulate(&psi, snap);
            }
        }
    }
    for (g, e) in record.density_series.iter().zip(&exact) {
        for (a, b) in g.iter().zip(e) {
            assert!((a - b).abs() < TOL);
        }
    }
}

#[test]
fn oracle_rejects_large_chains() {
    assert!(matches!(FockBasis::new(16, 8), Err(monitored_fermions::Error::SectorTooLarge { .. })));
}
