// SPDX-License-Identifier: Apache-2.0

//! Single quantum trajectories: non-Hermitian drift followed by stochastic
//! quantum jumps, to first order in `γ δt`.
//!
//! Each step first applies `K = exp(−i h_eff δt)` and re-orthonormalizes,
//! then draws one uniform `r_n` per bond and fires the bonds with
//! `r_n < γ δt ⟨L†_n L_n⟩`. All jump probabilities are taken from the
//! post-drift state; fired jumps are applied in ascending bond order.
//!
//! Randomness comes from a ChaCha8 stream selected by `(seed,
//! trajectory_index)`. Every step consumes exactly one draw per bond, so
//! the draw used for `(step, bond)` sits at a fixed position in the stream
//! and a run replays bit-identically no matter how trajectories are
//! scheduled across threads.

use faer::{Mat, MatRef};
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{JumpOperator, ObservableSet, SlaterState};
use crate::lattice::{build_h_eff, LatticeParams, SingleParticleMatrix};
use crate::linalg::{self, c64};

/// Hard upper limit on `γ δt`.
pub const MAX_GAMMA_DT: f64 = 0.5;
/// Above this `γ δt` the no-feedback dynamics develops a spurious boundary
/// accumulation.
pub const WARN_GAMMA_DT: f64 = 0.1;
pub const DEFAULT_DT: f64 = 0.01;

/// `|11..100..0⟩` with `⌈L/2⌉` particles on the left.
pub fn domain_wall(sites: usize) -> Vec<bool> {
    (0..sites).map(|i| i < sites.div_ceil(2)).collect()
}

/// `|1010..10⟩`.
pub fn neel(sites: usize) -> Vec<bool> {
    (0..sites).map(|i| i % 2 == 0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub lattice: LatticeParams,
    pub dt: f64,
    pub t_max: f64,
    pub initial_pattern: Vec<bool>,
    pub seed: u64,
    pub trajectory_index: u64,
    /// Steps between recorded snapshots.
    pub record_every: u64,
    pub record_density: bool,
}

impl TrajectoryConfig {
    /// Domain-wall start, `δt = 0.01`, snapshots every step.
    pub fn new(lattice: LatticeParams, t_max: f64) -> Self {
        let initial_pattern = domain_wall(lattice.sites);
        TrajectoryConfig {
            lattice,
            dt: DEFAULT_DT,
            t_max,
            initial_pattern,
            seed: 0,
            trajectory_index: 0,
            record_every: 1,
            record_density: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be finite and > 0, got {}", self.dt)));
        }
        let gdt = self.lattice.gamma * self.dt;
        if gdt > MAX_GAMMA_DT {
            return Err(Error::param("dt", format!("gamma*dt = {gdt} exceeds the hard limit {MAX_GAMMA_DT}")));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::param("t_max", format!("must be finite and >= 0, got {}", self.t_max)));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be >= 1"));
        }
        if self.initial_pattern.len() != self.lattice.sites {
            return Err(Error::param(
                "initial_pattern",
                format!("has {} sites, lattice has {}", self.initial_pattern.len(), self.lattice.sites),
            ));
        }
        if !self.initial_pattern.iter().any(|&b| b) {
            return Err(Error::param("initial_pattern", "needs at least one occupied site"));
        }
        self.steps().map(|_| ())
    }

    /// `t_max / δt`, which must be an integer.
    pub fn steps(&self) -> Result<u64> {
        let ratio = self.t_max / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::param("t_max", format!("t_max/dt = {ratio} is not an integer")));
        }
        Ok(steps as u64)
    }

    pub fn gamma_dt(&self) -> f64 {
        self.lattice.gamma * self.dt
    }

    pub fn warns_pseudo_skin(&self) -> bool {
        self.gamma_dt() > WARN_GAMMA_DT
    }

    /// The RNG stream of this trajectory.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.trajectory_index);
        rng
    }
}

/// A jump fired (or to be fired) after the drift of step `step`, where
/// step `s` ends at time `(s + 1) δt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JumpEvent {
    pub step: u64,
    pub bond: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JumpSchedule {
    Stochastic,
    /// Replay exactly these jumps and consume no randomness.
    Forced(Vec<JumpEvent>),
}

impl JumpSchedule {
    pub fn forced(mut events: Vec<JumpEvent>) -> Self {
        events.sort();
        JumpSchedule::Forced(events)
    }

    pub fn none() -> Self {
        JumpSchedule::Forced(Vec::new())
    }
}

pub enum StepJumps<'a, R> {
    Stochastic(&'a mut R),
    Forced { step: u64, bonds: &'a [usize] },
}

#[derive(Debug, Clone, Default)]
pub struct StepOutcome {
    pub fired: Vec<usize>,
    /// `γ δt ⟨L†_n L_n⟩` on the post-drift state, per bond.
    pub probabilities: Vec<f64>,
}

/// Precompute `exp(−i h_eff δt)`.
pub fn precompute_propagator(h_eff: &SingleParticleMatrix, dt: f64) -> Result<Mat<c64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
    }
    let h = h_eff.as_ref();
    let scaled = Mat::from_fn(h.nrows(), h.ncols(), |i, j| c64::new(0.0, -dt) * h[(i, j)]);
    linalg::expm(scaled.as_ref())
}

/// One drift-then-jump step.
pub fn step<R: Rng>(
    state: &mut SlaterState,
    propagator: MatRef<'_, c64>,
    jumps: &[JumpOperator],
    gamma_dt: f64,
    mode: StepJumps<'_, R>,
) -> Result<StepOutcome> {
    state.apply_propagator(propagator)?;
    let probabilities: Vec<f64> = jumps.iter().map(|j| gamma_dt * state.jump_expectation(j)).collect();
    let fired = match mode {
        StepJumps::Stochastic(rng) => {
            let mut fired = Vec::new();
            for (bond, &p) in probabilities.iter().enumerate() {
                let r: f64 = rng.sample(Open01);
                if r < p {
                    fired.push(bond);
                }
            }
            for &bond in &fired {
                state.apply_jump(&jumps[bond])?;
            }
            fired
        }
        StepJumps::Forced { step, bonds } => {
            for &bond in bonds {
                let jump = jumps
                    .get(bond)
                    .ok_or_else(|| Error::param("schedule", format!("bond {bond} is not a measurement bond")))?;
                let probability = gamma_dt * state.jump_expectation(jump);
                state.apply_jump(jump).map_err(|e| match e {
                    Error::UnoccupiedQuasiMode { .. } => Error::ScheduleMismatch { step, bond, probability },
                    other => other,
                })?;
            }
            bonds.to_vec()
        }
    };
    Ok(StepOutcome { fired, probabilities })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub config: TrajectoryConfig,
    pub snapshots: Vec<ObservableSet>,
    pub jump_log: Vec<JumpEvent>,
    /// Accumulated `γ δt ⟨L†_n L_n⟩` per bond: the expected number of jumps.
    pub expected_jumps: Vec<f64>,
}

impl TrajectoryRecord {
    /// `(time, ⟨n_i⟩)` rows when the config asked for density output.
    pub fn density_history(&self) -> Option<Vec<(f64, &[f64])>> {
        self.config
            .record_density
            .then(|| self.snapshots.iter().map(|s| (s.time, s.density.as_slice())).collect())
    }

    pub fn jump_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.expected_jumps.len()];
        for e in &self.jump_log {
            counts[e.bond] += 1;
        }
        counts
    }
}

/// Immutable per-run data: validated config, propagator and jump operators.
#[derive(Debug, Clone)]
pub struct TrajectoryEngine {
    config: TrajectoryConfig,
    propagator: Mat<c64>,
    jumps: Vec<JumpOperator>,
    steps: u64,
}

impl TrajectoryEngine {
    pub fn new(config: TrajectoryConfig) -> Result<Self> {
        config.validate()?;
        if config.warns_pseudo_skin() {
            log::warn!(
                "gamma*dt = {} > {}: first-order jump sampling may produce a pseudo skin effect",
                config.gamma_dt(),
                WARN_GAMMA_DT
            );
        }
        let h_eff = build_h_eff(&config.lattice, false)?;
        let propagator = precompute_propagator(&h_eff, config.dt)?;
        let jumps = JumpOperator::all(&config.lattice);
        let steps = config.steps()?;
        Ok(TrajectoryEngine { config, propagator, jumps, steps })
    }

    /// Same lattice and propagator, different trajectory stream.
    pub fn with_trajectory(&self, seed: u64, trajectory_index: u64) -> Self {
        let mut engine = self.clone();
        engine.config.seed = seed;
        engine.config.trajectory_index = trajectory_index;
        engine
    }

    pub fn config(&self) -> &TrajectoryConfig {
        &self.config
    }

    pub fn propagator(&self) -> MatRef<'_, c64> {
        self.propagator.as_ref()
    }

    pub fn jumps(&self) -> &[JumpOperator] {
        &self.jumps
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn runner(&self, schedule: JumpSchedule) -> Result<TrajectoryRunner<'_>> {
        if let JumpSchedule::Forced(events) = &schedule {
            if events.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::param("schedule", "forced events must be sorted by (step, bond)"));
            }
            if let Some(e) = events.iter().find(|e| e.bond >= self.jumps.len()) {
                return Err(Error::param("schedule", format!("bond {} is not a measurement bond", e.bond)));
            }
        }
        Ok(TrajectoryRunner {
            engine: self,
            state: SlaterState::from_occupation(&self.config.initial_pattern)?,
            rng: self.config.rng(),
            schedule,
            cursor: 0,
            step: 0,
            jump_log: Vec::new(),
            expected_jumps: vec![0.0; self.jumps.len()],
        })
    }

    /// Run all `t_max / δt` steps, recording snapshots at `t = 0`, every
    /// `record_every` steps and at `t_max`.
    pub fn run(&self, schedule: JumpSchedule) -> Result<TrajectoryRecord> {
        let mut runner = self.runner(schedule)?;
        let every = self.config.record_every;
        let wrap = |step: u64, e: Error| Error::Trajectory {
            trajectory: self.config.trajectory_index,
            step,
            source: Box::new(e),
        };
        let mut snapshots = vec![runner.observables().map_err(|e| wrap(0, e))?];
        while runner.step < self.steps {
            runner.advance().map_err(|e| wrap(runner.step, e))?;
            if runner.step % every == 0 || runner.step == self.steps {
                snapshots.push(runner.observables().map_err(|e| wrap(runner.step, e))?);
            }
        }
        Ok(TrajectoryRecord {
            config: self.config.clone(),
            snapshots,
            jump_log: runner.jump_log,
            expected_jumps: runner.expected_jumps,
        })
    }
}

/// Step-by-step driver over a [`TrajectoryEngine`].
pub struct TrajectoryRunner<'a> {
    engine: &'a TrajectoryEngine,
    state: SlaterState,
    rng: ChaCha8Rng,
    schedule: JumpSchedule,
    cursor: usize,
    step: u64,
    jump_log: Vec<JumpEvent>,
    expected_jumps: Vec<f64>,
}

impl TrajectoryRunner<'_> {
    pub fn state(&self) -> &SlaterState {
        &self.state
    }

    /// Number of completed steps.
    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.engine.config.dt
    }

    pub fn jump_log(&self) -> &[JumpEvent] {
        &self.jump_log
    }

    pub fn observables(&self) -> Result<ObservableSet> {
        self.state.observables(self.time())
    }

    /// Advance one step and return the fired bonds.
    pub fn advance(&mut self) -> Result<Vec<usize>> {
        let engine = self.engine;
        let gamma_dt = engine.config.gamma_dt();
        let step_index = self.step;
        let outcome = match &self.schedule {
            JumpSchedule::Stochastic => step(
                &mut self.state,
                engine.propagator(),
                &engine.jumps,
                gamma_dt,
                StepJumps::Stochastic(&mut self.rng),
            )?,
            JumpSchedule::Forced(events) => {
                let start = self.cursor;
                while self.cursor < events.len() && events[self.cursor].step == step_index {
                    self.cursor += 1;
                }
                let bonds: Vec<usize> = events[start..self.cursor].iter().map(|e| e.bond).collect();
                step::<ChaCha8Rng>(
                    &mut self.state,
                    engine.propagator(),
                    &engine.jumps,
                    gamma_dt,
                    StepJumps::Forced { step: step_index, bonds: &bonds },
                )?
            }
        };
        for (acc, p) in self.expected_jumps.iter_mut().zip(&outcome.probabilities) {
            *acc += p;
        }
        self.jump_log.extend(outcome.fired.iter().map(|&bond| JumpEvent { step: step_index, bond }));
        self.step += 1;
        Ok(outcome.fired)
    }
}
