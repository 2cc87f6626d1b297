use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::pipeline::{PipelineConfig, RAW_DIM};

/// Everything a harness command needs: the pipeline settings plus sweep and
/// output options.
///
/// The TOML schema is flat for pipeline scalars (`master_seed`, `episodes`,
/// `trials`, ...) with `[learner]` and `[env]` tables; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    /// manifold dimensions to sweep
    pub dims: Vec<usize>,
    /// also train on the raw integer features
    pub raw_baseline: bool,
    /// worker threads; `None` means available cores
    pub jobs: Option<usize>,
    /// write `sweep.svg`
    pub plot: bool,
    /// keep per-trial returns (and trial-0 policies) next to the aggregates
    pub debug: bool,
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            dims: (1..=RAW_DIM).collect(),
            raw_baseline: true,
            jobs: None,
            plot: true,
            debug: false,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl HarnessConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::ConfigParse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| HarnessError::ConfigRead { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::ConfigParse(m));
        if self.dims.is_empty() && !self.raw_baseline {
            return bad("nothing to sweep: dims is empty and raw_baseline is off".into());
        }
        if let Some(k) = self.dims.iter().find(|k| !(1..=RAW_DIM).contains(k)) {
            return bad(format!("dims entries must be in 1..=9, got {k}"));
        }
        let mut sorted = self.dims.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.dims.len() {
            return bad("dims contains duplicates".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be positive".into());
        }
        if self.pipeline.episodes == 0 {
            return bad("episodes must be positive".into());
        }
        self.pipeline.validate().map_err(|e| HarnessError::ConfigParse(e.to_string()))
    }

    /// Worker count after resolving the default.
    pub fn resolved_jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    /// The fully resolved config as TOML, with `jobs` filled in.
    pub fn to_resolved_toml(&self) -> String {
        Self { jobs: Some(self.resolved_jobs()), ..self.clone() }.toml_text()
    }

    fn toml_text(&self) -> String {
        let value = toml::Value::try_from(self).expect("config is representable as TOML");
        toml::to_string_pretty(&value).expect("config serializes")
    }
}

/// FNV-1a over the resolved config with `jobs` removed, so the hash names the
/// experiment rather than the machine it ran on.
pub fn config_hash(cfg: &HarnessConfig) -> String {
    let text = HarnessConfig { jobs: None, ..cfg.clone() }.toml_text();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}
