use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::HarnessConfig;
use super::{create_out_dir, render, write_file, HarnessError};
use crate::env::{generate_level_with, level::MAX_SEED, write_event_log_csv, Action, EnvError, Event, Mode, Platformer};
use crate::fmt_num;
use crate::learner::{
    play_greedy, Discretizer, EpisodeRecord, Environment, QTable, QTableSnapshot, StateEncoder,
};
use crate::pca::{BasisDocument, TruncatedBasis};
use crate::seed::{rng_for, Stream};

/// How a saved table encodes observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderDocument {
    Raw,
    Projected { basis: BasisDocument, discretizer: Discretizer },
}

/// A greedy policy on disk: the encoder and the Q-table it indexes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub encoder: EncoderDocument,
    pub q: QTableSnapshot,
}

impl PolicyFile {
    pub fn new(encoder: &StateEncoder, q: &QTable) -> Self {
        let encoder = match encoder {
            StateEncoder::Raw => EncoderDocument::Raw,
            StateEncoder::Projected { basis, discretizer } => EncoderDocument::Projected {
                basis: BasisDocument::from_basis(basis.parent(), Some(basis.k())),
                discretizer: discretizer.clone(),
            },
        };
        Self { encoder, q: q.to_snapshot() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("policy serializes")
    }

    /// Rebuilds the encoder and table, validating both.
    pub fn into_parts(self) -> Result<(StateEncoder, QTable), String> {
        let encoder = match self.encoder {
            EncoderDocument::Raw => StateEncoder::Raw,
            EncoderDocument::Projected { basis, discretizer } => {
                let k = basis.k.ok_or("basis has no truncation k")?;
                let basis = std::sync::Arc::new(basis.into_basis().map_err(|e| e.to_string())?);
                let truncated = TruncatedBasis::new(basis, k).map_err(|e| e.to_string())?;
                let discretizer = Discretizer::new(
                    discretizer.lo().to_vec(),
                    discretizer.hi().to_vec(),
                    discretizer.bins_per_dim(),
                )
                .map_err(|e| e.to_string())?;
                StateEncoder::projected(truncated, discretizer).map_err(|e| e.to_string())?
            }
        };
        let q = QTable::from_snapshot(&self.q).map_err(|e| e.to_string())?;
        if q.num_actions() != Action::COUNT {
            return Err(format!("table has {} actions, expected {}", q.num_actions(), Action::COUNT));
        }
        Ok((encoder, q))
    }
}

pub fn load_policy(path: &Path) -> Result<(StateEncoder, QTable), HarnessError> {
    let fail = |reason: String| HarnessError::Policy { path: path.to_path_buf(), reason };
    let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    let file: PolicyFile = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
    file.into_parts().map_err(fail)
}

/// The actor in [`cmd_play`].
#[derive(Debug, Clone)]
pub enum PlayPolicy {
    Random,
    Greedy { encoder: StateEncoder, q: QTable },
}

#[derive(Debug, Clone)]
pub struct PlayReport {
    pub level_seed: u64,
    pub record: EpisodeRecord,
    pub events: Vec<Event>,
    pub event_log: Option<PathBuf>,
}

/// Plays one episode on level `level_seed`, starting small.
///
/// The random policy and greedy tie-breaking draw from the `Play` stream at
/// index `level_seed`, so a seed and policy always replay the same episode.
pub fn play_episode(cfg: &HarnessConfig, level_seed: u64, policy: &PlayPolicy) -> Result<PlayReport, HarnessError> {
    if level_seed > MAX_SEED {
        return Err(EnvError::SeedOutOfRange(level_seed).into());
    }
    let p = &cfg.pipeline;
    let level = generate_level_with(level_seed, p.difficulty, &p.env)?;
    let mut env = Platformer::new(&level, Mode::Small, p.env.clone()).with_event_log();
    let mut rng = rng_for(p.master_seed, Stream::Play, level_seed);
    let record = match policy {
        PlayPolicy::Greedy { encoder, q } => play_greedy(&mut env, encoder, q, &mut rng)?,
        PlayPolicy::Random => {
            use rand::Rng as _;
            let mut total_return = 0.0;
            let mut steps = 0;
            loop {
                let out = Environment::step(&mut env, rng.random_range(0..Action::COUNT))?;
                steps += 1;
                total_return += out.reward;
                if out.done {
                    break EpisodeRecord { total_return, steps, cause: out.cause };
                }
            }
        }
    };
    Ok(PlayReport { level_seed, record, events: env.events().to_vec(), event_log: None })
}

/// Event log as CSV: `tick,event,reward`, closed by an `end_<cause>` row
/// carrying the step count and episode return.
pub fn event_log_csv(report: &PlayReport) -> Vec<u8> {
    render(|out| {
        write_event_log_csv(out, &report.events)?;
        let r = &report.record;
        writeln!(out, "{},end_{},{}", r.steps, r.cause.as_str(), fmt_num(r.total_return))
    })
}

/// Plays one episode and writes `config.resolved` and `play_seed{S}.csv` under `out`.
pub fn cmd_play(
    cfg: &HarnessConfig,
    level_seed: u64,
    policy: Option<&Path>,
    out: &Path,
) -> Result<PlayReport, HarnessError> {
    cfg.validate()?;
    let policy = match policy {
        None => PlayPolicy::Random,
        Some(path) => {
            let (encoder, q) = load_policy(path)?;
            PlayPolicy::Greedy { encoder, q }
        }
    };
    let mut report = play_episode(cfg, level_seed, &policy)?;
    create_out_dir(out)?;
    write_file(out, "config.resolved", cfg.to_resolved_toml().as_bytes())?;
    let path = write_file(out, &format!("play_seed{level_seed}.csv"), &event_log_csv(&report))?;
    report.event_log = Some(path);
    Ok(report)
}
