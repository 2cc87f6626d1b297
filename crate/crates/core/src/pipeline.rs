//! Demonstrations, basis fitting and projected training, end to end.
//!
//! Randomness is split from the master seed per [`Stream`]: demonstration
//! episode `i` uses `(Demonstrations, i)`, and trial `t` draws its levels and
//! start modes from `(TrialLevels, t)` and its exploration from
//! `(TrialLearner, t)`. Trials with the same index therefore see the same level
//! sequence whatever manifold dimension they learn in.

use std::io::Write;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{generate_level_with, level::MAX_SEED, Action, EnvConfig, EnvError, Mode, Observation, Platformer, FEATURE_NAMES};
use crate::learner::{
    play_greedy, Agent, Discretizer, EpisodeRecord, LearnerError, LearnerParams, StateEncoder, DEFAULT_BINS,
};
use crate::pca::{fit_pca, PcaError, PrincipalBasis, SampleMatrix, TruncatedBasis};
use crate::seed::{rng_for, Rng, Stream};
use crate::fmt_num;

/// Number of raw observation features.
pub const RAW_DIM: usize = 9;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("demonstrations are degenerate: every recorded state is identical")]
    DegenerateDemonstrations,
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoPolicy {
    /// uniform over the twelve actions
    Random,
    /// a briefly trained full-state agent acting ε-greedily
    EpsilonGreedyPretrained,
}

impl DemoPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            DemoPolicy::Random => "random",
            DemoPolicy::EpsilonGreedyPretrained => "epsilon_greedy_pretrained",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub master_seed: u64,
    /// manifold dimension
    pub k: usize,
    /// learn on raw integer features instead of projecting
    pub raw_features: bool,
    pub demo_episodes: usize,
    pub demo_policy: DemoPolicy,
    /// training episodes for the pretrained demonstration policy
    pub pretrain_episodes: usize,
    pub standardize: bool,
    pub bins_per_dim: usize,
    pub episodes: usize,
    pub trials: usize,
    pub difficulty: u32,
    pub learner: LearnerParams,
    pub env: EnvConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            k: 4,
            raw_features: false,
            demo_episodes: 200,
            demo_policy: DemoPolicy::Random,
            pretrain_episodes: 300,
            standardize: true,
            bins_per_dim: DEFAULT_BINS,
            episodes: 1500,
            trials: 20,
            difficulty: 0,
            learner: LearnerParams::default(),
            env: EnvConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(1..=RAW_DIM).contains(&self.k) {
            return bad(format!("k must be in 1..=9, got {}", self.k));
        }
        if self.demo_episodes == 0 {
            return bad("demo_episodes must be positive".into());
        }
        if self.bins_per_dim == 0 {
            return bad("bins_per_dim must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.env.step_limit == 0 {
            return bad("env.step_limit must be positive".into());
        }
        self.learner.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoMeta {
    pub policy: DemoPolicy,
    pub episodes: usize,
    pub level_seeds: Vec<u64>,
}

/// Raw observations visited by the demonstration policy.
#[derive(Debug, Clone, PartialEq)]
pub struct DemonstrationSet {
    pub observations: SampleMatrix,
    pub meta: DemoMeta,
}

impl DemonstrationSet {
    /// CSV with one named column per feature.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", FEATURE_NAMES.join(","))?;
        for row in self.observations.iter_rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{}", *v as u32)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// A fresh episode: level seed in `[0, 10^6]` and a uniformly drawn start mode.
pub fn draw_episode(rng: &mut Rng) -> (u64, Mode) {
    let seed = rng.random_range(0..=MAX_SEED);
    let mode = Mode::ALL[rng.random_range(0..Mode::ALL.len())];
    (seed, mode)
}

fn new_episode(cfg: &PipelineConfig, rng: &mut Rng) -> Result<(u64, Platformer), PipelineError> {
    let (seed, mode) = draw_episode(rng);
    let level = generate_level_with(seed, cfg.difficulty, &cfg.env)?;
    Ok((seed, Platformer::new(&level, mode, cfg.env.clone())))
}

/// Runs the demonstration policy and records every visited observation,
/// initial states included.
pub fn collect_demonstrations(
    cfg: &PipelineConfig,
    policy: DemoPolicy,
    episodes: usize,
) -> Result<DemonstrationSet, PipelineError> {
    if episodes == 0 {
        return Err(PipelineError::Config("demo_episodes must be positive".into()));
    }
    let pretrained = match policy {
        DemoPolicy::Random => None,
        DemoPolicy::EpsilonGreedyPretrained => Some(pretrain_full_state(cfg)?),
    };

    let mut data = Vec::new();
    let mut level_seeds = Vec::with_capacity(episodes);
    let push = |o: Observation, data: &mut Vec<f64>| data.extend_from_slice(&o.features());
    for i in 0..episodes {
        let mut rng = rng_for(cfg.master_seed, Stream::Demonstrations, i as u64);
        let (seed, mut env) = new_episode(cfg, &mut rng)?;
        level_seeds.push(seed);
        push(env.observation(), &mut data);
        loop {
            let action = match &pretrained {
                None => Action::from_index(rng.random_range(0..Action::COUNT)).expect("in range"),
                Some(agent) => {
                    let key = StateEncoder::Raw.encode(&env.observation().features())?;
                    let (a, _) = crate::learner::select_action(&agent.q, &key, &agent.params, &mut rng);
                    Action::from_index(a).expect("in range")
                }
            };
            let r = env.step(action)?;
            push(r.observation, &mut data);
            if r.done {
                break;
            }
        }
    }
    let rows = data.len() / RAW_DIM;
    Ok(DemonstrationSet {
        observations: SampleMatrix::new(rows, RAW_DIM, data)?,
        meta: DemoMeta { policy, episodes, level_seeds },
    })
}

fn pretrain_full_state(cfg: &PipelineConfig) -> Result<Agent, PipelineError> {
    let mut agent = Agent::new(Action::COUNT, cfg.learner, rng_for(cfg.master_seed, Stream::Pretrain, 1))?;
    let mut levels = rng_for(cfg.master_seed, Stream::Pretrain, 0);
    for _ in 0..cfg.pretrain_episodes {
        let (_, mut env) = new_episode(cfg, &mut levels)?;
        agent.run_episode(&mut env, &StateEncoder::Raw)?;
    }
    Ok(agent)
}

/// Fitted state pipeline: the full basis, its truncation and the discretizer.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub basis: Arc<PrincipalBasis>,
    pub truncated: TruncatedBasis,
    pub discretizer: Discretizer,
}

impl Pipeline {
    pub fn encoder(&self) -> StateEncoder {
        StateEncoder::Projected { basis: self.truncated.clone(), discretizer: self.discretizer.clone() }
    }
}

/// Fits the basis on demonstrations (once; it is never refitted).
pub fn fit_basis(demos: &DemonstrationSet, standardize: bool) -> Result<Arc<PrincipalBasis>, PipelineError> {
    let basis = fit_pca(&demos.observations, standardize)?;
    if crate::pca::explained_variance_ratio(&basis, 1) == Err(PcaError::DegenerateSpectrum) {
        return Err(PipelineError::DegenerateDemonstrations);
    }
    Ok(Arc::new(basis))
}

/// Truncates `basis` to `k` and bounds the discretizer by the projected
/// demonstration extrema.
pub fn pipeline_for_k(
    basis: &Arc<PrincipalBasis>,
    demos: &DemonstrationSet,
    k: usize,
    bins: usize,
) -> Result<Pipeline, PipelineError> {
    let truncated = basis.truncate(k)?;
    let projected = truncated.project_batch(&demos.observations)?;
    let discretizer = Discretizer::from_projected(&projected, bins)?;
    Ok(Pipeline { basis: Arc::clone(basis), truncated, discretizer })
}

/// Collects demonstrations, fits PCA, truncates to `cfg.k` and sets the discretizer bounds.
pub fn build_pipeline(cfg: &PipelineConfig) -> Result<(Pipeline, DemonstrationSet), PipelineError> {
    cfg.validate()?;
    let demos = collect_demonstrations(cfg, cfg.demo_policy, cfg.demo_episodes)?;
    let basis = fit_basis(&demos, cfg.standardize)?;
    Ok((pipeline_for_k(&basis, &demos, cfg.k, cfg.bins_per_dim)?, demos))
}

/// Trains one trial for `cfg.episodes` episodes and returns the records in
/// order together with the trained agent.
pub fn train(cfg: &PipelineConfig, encoder: &StateEncoder, trial: u64) -> Result<(Vec<EpisodeRecord>, Agent), PipelineError> {
    cfg.learner.validate()?;
    let mut levels = rng_for(cfg.master_seed, Stream::TrialLevels, trial);
    let mut agent = Agent::new(Action::COUNT, cfg.learner, rng_for(cfg.master_seed, Stream::TrialLearner, trial))?;
    let mut records = Vec::with_capacity(cfg.episodes);
    for _ in 0..cfg.episodes {
        let (_, mut env) = new_episode(cfg, &mut levels)?;
        records.push(agent.run_episode(&mut env, encoder)?);
    }
    Ok((records, agent))
}

/// Greedy evaluation of a trained table on `levels` fresh episodes drawn from `rng`.
pub fn evaluate_greedy(
    cfg: &PipelineConfig,
    encoder: &StateEncoder,
    agent: &Agent,
    episodes: usize,
    rng: &mut Rng,
) -> Result<Vec<EpisodeRecord>, PipelineError> {
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let (_, mut env) = new_episode(cfg, rng)?;
        out.push(play_greedy(&mut env, encoder, &agent.q, rng)?);
    }
    Ok(out)
}

/// Mean of the returns in a slice of records; 0 when empty.
pub fn mean_return(records: &[EpisodeRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().map(|r| r.total_return).sum::<f64>() / records.len() as f64
}

/// Formats a record list as CSV (`episode,return,steps,cause`).
pub fn write_records_csv<W: Write>(out: &mut W, records: &[EpisodeRecord]) -> std::io::Result<()> {
    writeln!(out, "episode,return,steps,cause")?;
    for (i, r) in records.iter().enumerate() {
        writeln!(out, "{},{},{},{}", i, fmt_num(r.total_return), r.steps, r.cause.as_str())?;
    }
    Ok(())
}
