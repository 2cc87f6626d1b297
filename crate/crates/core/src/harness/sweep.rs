use std::fmt;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{config_hash, HarnessConfig};
use super::play::PolicyFile;
use super::svg::render_sweep_svg;
use super::{create_out_dir, render, write_file, HarnessError};
use crate::fmt_num;
use crate::learner::{Agent, StateEncoder};
use crate::pipeline::{collect_demonstrations, fit_basis, pipeline_for_k, train};

/// Episodes at the end of a curve that count as its plateau.
pub const FINAL_WINDOW: usize = 300;

/// One learning configuration in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SeriesId {
    /// projected onto the first `k` components
    K(usize),
    /// raw integer features
    Raw,
}

impl SeriesId {
    /// Label used in CSV rows and file names: `k4`, `raw`.
    pub fn label(self) -> String {
        match self {
            SeriesId::K(k) => format!("k{k}"),
            SeriesId::Raw => "raw".into(),
        }
    }

    pub fn file_name(self) -> String {
        match self {
            SeriesId::K(k) => format!("sweep_k{k}.csv"),
            SeriesId::Raw => "sweep_raw.csv".into(),
        }
    }
}

impl fmt::Display for SeriesId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Per-episode aggregate over trials for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub id: SeriesId,
    pub trials: usize,
    pub mean: Vec<f64>,
    /// sample standard deviation over √trials; 0 with a single trial
    pub stderr: Vec<f64>,
    /// `per_trial[t][e]`, kept only in debug mode
    pub per_trial: Option<Vec<Vec<f64>>>,
}

impl Curve {
    pub fn from_trials(id: SeriesId, returns: &[Vec<f64>], keep: bool) -> Self {
        let trials = returns.len();
        let episodes = returns.first().map_or(0, Vec::len);
        let mut mean = Vec::with_capacity(episodes);
        let mut stderr = Vec::with_capacity(episodes);
        for e in 0..episodes {
            let m = returns.iter().map(|r| r[e]).sum::<f64>() / trials as f64;
            let se = if trials > 1 {
                let var = returns.iter().map(|r| (r[e] - m).powi(2)).sum::<f64>() / (trials - 1) as f64;
                (var / trials as f64).sqrt()
            } else {
                0.0
            };
            mean.push(m);
            stderr.push(se);
        }
        Self { id, trials, mean, stderr, per_trial: keep.then(|| returns.to_vec()) }
    }

    pub fn episodes(&self) -> usize {
        self.mean.len()
    }
}

/// Aggregated sweep plus the window statistics derived from per-trial returns.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub curves: Vec<Curve>,
    /// per series: mean over trials of each trial's final-window mean, and its standard error
    pub final_window: Vec<(SeriesId, f64, f64)>,
    pub config_hash: String,
    pub version: &'static str,
    pub wall_time_secs: f64,
}

impl SweepResult {
    pub fn curve(&self, id: SeriesId) -> Option<&Curve> {
        self.curves.iter().find(|c| c.id == id)
    }

    /// `(mean, stderr)` of the final-window return for `id`.
    pub fn final_window(&self, id: SeriesId) -> Option<(f64, f64)> {
        self.final_window.iter().find(|f| f.0 == id).map(|f| (f.1, f.2))
    }
}

fn window_stats(returns: &[Vec<f64>]) -> (f64, f64) {
    let per_trial: Vec<f64> = returns
        .iter()
        .map(|r| {
            let tail = &r[r.len().saturating_sub(FINAL_WINDOW)..];
            tail.iter().sum::<f64>() / tail.len().max(1) as f64
        })
        .collect();
    let n = per_trial.len() as f64;
    let m = per_trial.iter().sum::<f64>() / n;
    let se = if per_trial.len() > 1 {
        (per_trial.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    (m, se)
}

struct Unit {
    returns: Vec<f64>,
    agent: Option<Agent>,
}

/// Runs every `(series, trial)` unit on a pool of `cfg.resolved_jobs()`
/// workers. Results are merged in series-then-trial order, so the worker count
/// never changes the output.
pub fn run_sweep(cfg: &HarnessConfig) -> Result<(SweepResult, Vec<(SeriesId, PolicyFile)>), HarnessError> {
    cfg.validate()?;
    let started = Instant::now();
    let p = &cfg.pipeline;

    let mut series: Vec<(SeriesId, StateEncoder)> = Vec::new();
    if !cfg.dims.is_empty() {
        let demos = collect_demonstrations(p, p.demo_policy, p.demo_episodes)?;
        let basis = fit_basis(&demos, p.standardize)?;
        for &k in &cfg.dims {
            series.push((SeriesId::K(k), pipeline_for_k(&basis, &demos, k, p.bins_per_dim)?.encoder()));
        }
    }
    if cfg.raw_baseline {
        series.push((SeriesId::Raw, StateEncoder::Raw));
    }

    let units: Vec<(usize, u64)> = (0..series.len())
        .flat_map(|s| (0..p.trials as u64).map(move |t| (s, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.resolved_jobs())
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let results: Vec<Result<Unit, HarnessError>> = pool.install(|| {
        units
            .par_iter()
            .map(|&(s, trial)| {
                let (records, agent) = train(p, &series[s].1, trial)?;
                Ok(Unit {
                    returns: records.iter().map(|r| r.total_return).collect(),
                    agent: (cfg.debug && trial == 0).then_some(agent),
                })
            })
            .collect()
    });

    let mut results = results.into_iter();
    let mut curves = Vec::with_capacity(series.len());
    let mut final_window = Vec::with_capacity(series.len());
    let mut policies = Vec::new();
    for (id, encoder) in &series {
        let mut returns = Vec::with_capacity(p.trials);
        for _ in 0..p.trials {
            let unit = results.next().expect("one result per unit")?;
            if let Some(agent) = unit.agent {
                policies.push((*id, PolicyFile::new(encoder, &agent.q)));
            }
            returns.push(unit.returns);
        }
        let (m, se) = window_stats(&returns);
        final_window.push((*id, m, se));
        curves.push(Curve::from_trials(*id, &returns, cfg.debug));
    }

    let result = SweepResult {
        curves,
        final_window,
        config_hash: config_hash(cfg),
        version: env!("CARGO_PKG_VERSION"),
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((result, policies))
}

pub(crate) fn curve_csv(curve: &Curve) -> Vec<u8> {
    render(|out| {
        use std::io::Write;
        writeln!(out, "episode,mean_return,stderr")?;
        for e in 0..curve.episodes() {
            writeln!(out, "{},{},{}", e + 1, fmt_num(curve.mean[e]), fmt_num(curve.stderr[e]))?;
        }
        Ok(())
    })
}

pub(crate) fn combined_csv(curves: &[Curve]) -> Vec<u8> {
    render(|out| {
        use std::io::Write;
        writeln!(out, "series,episode,mean_return,stderr,trials")?;
        for c in curves {
            for e in 0..c.episodes() {
                writeln!(out, "{},{},{},{},{}", c.id, e + 1, fmt_num(c.mean[e]), fmt_num(c.stderr[e]), c.trials)?;
            }
        }
        Ok(())
    })
}

fn trials_csv(curve: &Curve, per_trial: &[Vec<f64>]) -> Vec<u8> {
    render(|out| {
        use std::io::Write;
        let header: Vec<String> = (1..=per_trial.len()).map(|t| format!("trial_{t}")).collect();
        writeln!(out, "episode,{}", header.join(","))?;
        for e in 0..curve.episodes() {
            let cells: Vec<String> = per_trial.iter().map(|r| fmt_num(r[e])).collect();
            writeln!(out, "{},{}", e + 1, cells.join(","))?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    config_hash: &'a str,
    version: &'a str,
    wall_time_secs: f64,
    trials: usize,
    episodes: usize,
    series: Vec<String>,
    final_window: usize,
    final_window_mean: Vec<f64>,
    final_window_stderr: Vec<f64>,
}

/// Runs the sweep and writes its files under `out`:
///
/// * `config.resolved`: the resolved TOML config
/// * `sweep_k{K}.csv`, `sweep_raw.csv`: `episode,mean_return,stderr`, episodes from 1
/// * `sweep_combined.csv`: `series,episode,mean_return,stderr,trials`
/// * `sweep_meta.json`: config hash, version, wall time and final-window statistics
/// * `sweep.svg` when `plot` is set
/// * with `debug`: `sweep_k{K}_trials.csv` (one column per trial) and
///   `policy_k{K}.json` (trial 1's final table)
///
/// Everything except `sweep_meta.json` is byte-identical across runs of the same config.
pub fn cmd_sweep(cfg: &HarnessConfig, out: &Path) -> Result<SweepResult, HarnessError> {
    create_out_dir(out)?;
    write_file(out, "config.resolved", cfg.to_resolved_toml().as_bytes())?;
    let (result, policies) = run_sweep(cfg)?;

    for curve in &result.curves {
        write_file(out, &curve.id.file_name(), &curve_csv(curve))?;
        if let Some(per_trial) = &curve.per_trial {
            let name = curve.id.file_name().replace(".csv", "_trials.csv");
            write_file(out, &name, &trials_csv(curve, per_trial))?;
        }
    }
    write_file(out, "sweep_combined.csv", &combined_csv(&result.curves))?;
    for (id, policy) in &policies {
        let name = format!("policy_{}.json", id.label());
        write_file(out, &name, policy.to_json().as_bytes())?;
    }
    if cfg.plot {
        write_file(out, "sweep.svg", render_sweep_svg(&result).as_bytes())?;
    }
    let meta = SweepMeta {
        config_hash: &result.config_hash,
        version: result.version,
        wall_time_secs: result.wall_time_secs,
        trials: cfg.pipeline.trials,
        episodes: cfg.pipeline.episodes,
        series: result.curves.iter().map(|c| c.id.label()).collect(),
        final_window: FINAL_WINDOW,
        final_window_mean: result.final_window.iter().map(|f| f.1).collect(),
        final_window_stderr: result.final_window.iter().map(|f| f.2).collect(),
    };
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    write_file(out, "sweep_meta.json", json.as_bytes())?;
    Ok(result)
}
