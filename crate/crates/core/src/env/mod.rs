//! A deterministic tile-grid platformer.
//!
//! The agent sees only the nine-feature [`Observation`], picks one of the
//! twelve combined [`Action`]s per tick, and is scored with the
//! [`RewardSchedule`]. Levels are generated from a seed in `[0, 10^6]`.

mod action;
pub mod level;
mod observation;
pub mod physics;
mod world;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::{Action, Direction, Speed};
pub use level::{generate_level, generate_level_with, EntityKind, LevelSpec, Spawn, Tile, TileGrid};
pub use observation::{
    compass, Observation, ENEMY_ABSENT, FEATURE_MAX, FEATURE_NAMES, RECEPTIVE_RADIUS, STILL,
};
pub use world::{
    encode_observation, write_event_log_csv, Enemy, Event, EventKind, Item, Mode, Platformer, StepResult,
    WorldState,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("level seed {0} outside [0, 1000000]")]
    SeedOutOfRange(u64),
    #[error("could not generate a traversable level for seed {seed}, difficulty {difficulty}")]
    GenerationFailed { seed: u64, difficulty: u32 },
    #[error("step called after the episode ended")]
    StepAfterDone,
    #[error("action index {0} out of range 0..12")]
    BadAction(usize),
}

/// Score awarded per event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardSchedule {
    pub kill_enemy: f64,
    pub mushroom: f64,
    pub fireflower: f64,
    pub coin: f64,
    pub hidden_block: f64,
    pub finish_level: f64,
    pub hurt: f64,
    pub die: f64,
}

impl Default for RewardSchedule {
    fn default() -> Self {
        Self {
            kill_enemy: 10.0,
            mushroom: 58.0,
            fireflower: 64.0,
            coin: 16.0,
            hidden_block: 24.0,
            finish_level: 1024.0,
            hurt: -42.0,
            die: -512.0,
        }
    }
}

/// Environment parameters. All fields have defaults, so a config file only
/// lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// ticks before an episode ends with [`Termination::Timeout`]
    pub step_limit: u32,
    pub level_length: usize,
    pub level_height: usize,
    /// goombas per 100 columns at difficulty 0, drawn uniformly from `[lo, hi]`
    pub enemy_density: (f64, f64),
    /// maximum number of rising ticks per jump
    pub jump_ticks: u32,
    /// cells moved per tick while running
    pub run_cells: u32,
    /// goombas move one cell every this many ticks
    pub enemy_period: u32,
    pub fire_range: i32,
    pub fire_cooldown: u32,
    pub invulnerable_ticks: u32,
    pub rewards: RewardSchedule,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            step_limit: 2000,
            level_length: 96,
            level_height: 12,
            enemy_density: (4.0, 8.0),
            jump_ticks: 4,
            run_cells: 2,
            enemy_period: 2,
            fire_range: 6,
            fire_cooldown: 8,
            invulnerable_ticks: 16,
            rewards: RewardSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Running,
    Finished,
    Died,
    Timeout,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Running => "running",
            Termination::Finished => "finished",
            Termination::Died => "died",
            Termination::Timeout => "timeout",
        }
    }
}
