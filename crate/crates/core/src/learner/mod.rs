//! Tabular Watkins Q(λ) over discretized manifold coordinates.
//!
//! The discretizer is a reconstruction: continuous projected coordinates are
//! binned uniformly between the extrema seen in the demonstration set, so the
//! learner can stay tabular.

mod discretize;
mod qtable;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::env::{Action, EnvError, Platformer, Termination};
use crate::pca::PcaError;
use crate::seed::Rng;

pub use discretize::{Discretizer, StateEncoder, StateKey, DEFAULT_BINS};
pub use qtable::{select_action, update, EligibilityTraces, QTable, QTableSnapshot, Transition, TRACE_EVICTION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("invalid learner parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite state coordinate")]
    NonFinite,
    #[error("non-finite reward {0}")]
    NonFiniteReward(f64),
    #[error("action {0} out of range")]
    BadAction(usize),
    #[error("bad Q-table snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerParams {
    pub alpha: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self { alpha: 0.01, lambda: 0.5, gamma: 0.9, epsilon: 0.05 }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |what: &str| Err(LearnerError::InvalidParams(what.to_string()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must be in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must be in [0, 1]");
        }
        Ok(())
    }
}

/// Result of one environment step as the learner sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
    pub cause: Termination,
}

/// An episodic environment with a discrete action set and real feature vector.
///
/// The environment is expected to be positioned at the start of an episode
/// when handed to [`run_episode`].
pub trait Environment {
    fn num_actions(&self) -> usize;
    fn features(&self) -> SmallVec<[f64; 9]>;
    fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError>;
}

impl Environment for Platformer {
    fn num_actions(&self) -> usize {
        Action::COUNT
    }

    fn features(&self) -> SmallVec<[f64; 9]> {
        SmallVec::from_slice(&self.observation().features())
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        let action = Action::from_index(action).ok_or(EnvError::BadAction(action))?;
        let r = Platformer::step(self, action)?;
        Ok(StepOutcome { reward: r.reward, done: r.done, cause: r.cause })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub total_return: f64,
    pub steps: u32,
    pub cause: Termination,
}

/// The mutable half of an agent: its table, traces and random stream.
#[derive(Debug, Clone)]
pub struct Agent {
    pub q: QTable,
    pub traces: EligibilityTraces,
    pub params: LearnerParams,
    pub rng: Rng,
}

impl Agent {
    pub fn new(num_actions: usize, params: LearnerParams, rng: Rng) -> Result<Self, LearnerError> {
        params.validate()?;
        Ok(Self { q: QTable::new(num_actions), traces: EligibilityTraces::new(), params, rng })
    }

    pub fn run_episode<E: Environment>(&mut self, env: &mut E, encoder: &StateEncoder) -> Result<EpisodeRecord, LearnerError> {
        run_episode(env, encoder, &mut self.q, &mut self.traces, &self.params, &mut self.rng)
    }
}

/// Runs one learning episode: encode, act, observe, encode, update, until done.
pub fn run_episode<E: Environment>(
    env: &mut E,
    encoder: &StateEncoder,
    q: &mut QTable,
    traces: &mut EligibilityTraces,
    params: &LearnerParams,
    rng: &mut Rng,
) -> Result<EpisodeRecord, LearnerError> {
    if env.num_actions() != q.num_actions() {
        return Err(LearnerError::DimensionMismatch { expected: q.num_actions(), got: env.num_actions() });
    }
    traces.clear();
    let mut state = encoder.encode(&env.features())?;
    let (mut action, _) = select_action(q, &state, params, rng);
    let mut total_return = 0.0;
    let mut steps = 0u32;
    loop {
        let out = env.step(action)?;
        steps += 1;
        total_return += out.reward;
        let next_state = encoder.encode(&env.features())?;
        if out.done {
            let t = Transition {
                state: &state,
                action,
                reward: out.reward,
                next_state: &next_state,
                done: true,
                next_greedy: true,
            };
            update(q, traces, &t, params)?;
            return Ok(EpisodeRecord { total_return, steps, cause: out.cause });
        }
        let (next_action, next_greedy) = select_action(q, &next_state, params, rng);
        let t = Transition {
            state: &state,
            action,
            reward: out.reward,
            next_state: &next_state,
            done: false,
            next_greedy,
        };
        update(q, traces, &t, params)?;
        state = next_state;
        action = next_action;
    }
}

/// Plays one episode greedily without learning (ties broken by `rng`).
pub fn play_greedy<E: Environment>(
    env: &mut E,
    encoder: &StateEncoder,
    q: &QTable,
    rng: &mut Rng,
) -> Result<EpisodeRecord, LearnerError> {
    let greedy = LearnerParams { epsilon: 0.0, ..LearnerParams::default() };
    let mut total_return = 0.0;
    let mut steps = 0;
    loop {
        let s = encoder.encode(&env.features())?;
        let (a, _) = select_action(q, &s, &greedy, rng);
        let out = env.step(a)?;
        steps += 1;
        total_return += out.reward;
        if out.done {
            return Ok(EpisodeRecord { total_return, steps, cause: out.cause });
        }
    }
}
