//! Experiment runner behind the command-line tool: the dimension sweep, the
//! loadings report, single-episode playback and demonstration export.
//!
//! Every command writes into one output directory and leaves a
//! `config.resolved` there. CSV numbers use [`crate::fmt_num`].

mod config;
mod play;
mod report;
mod svg;
mod sweep;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::learner::LearnerError;
use crate::pca::PcaError;
use crate::pipeline::PipelineError;

pub use config::{config_hash, HarnessConfig};
pub use play::{cmd_play, event_log_csv, load_policy, play_episode, EncoderDocument, PlayPolicy, PlayReport, PolicyFile};
pub use report::{cmd_collect, cmd_loadings, loadings_report, write_spectrum_csv, LoadingsReport};
pub use svg::{moving_average, render_sweep_svg, SMOOTHING_WINDOW};
pub use sweep::{cmd_sweep, run_sweep, Curve, SeriesId, SweepResult, FINAL_WINDOW};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: std::io::Error },
    #[error("bad config: {0}")]
    ConfigParse(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("cannot read policy {path}: {reason}")]
    Policy { path: PathBuf, reason: String },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl From<LearnerError> for HarnessError {
    fn from(e: LearnerError) -> Self {
        HarnessError::Pipeline(e.into())
    }
}

impl From<PcaError> for HarnessError {
    fn from(e: PcaError) -> Self {
        HarnessError::Pipeline(e.into())
    }
}

impl From<crate::env::EnvError> for HarnessError {
    fn from(e: crate::env::EnvError) -> Self {
        HarnessError::Pipeline(e.into())
    }
}

fn create_out_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Output { path: dir.to_path_buf(), source })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, HarnessError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|source| HarnessError::Output { path: path.clone(), source })?;
    Ok(path)
}

/// Renders into a buffer; writing to a `Vec` cannot fail.
fn render(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}
