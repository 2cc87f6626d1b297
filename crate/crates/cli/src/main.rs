use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use manifold_rl::harness::{cmd_collect, cmd_loadings, cmd_play, cmd_sweep, HarnessConfig};

/// Learn platformer policies in a PCA manifold of the observation space.
#[derive(Parser)]
#[command(name = "manifold-rl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured dimension (and the raw baseline) and write learning curves.
    Sweep(Common),
    /// Fit the basis on demonstrations and write loadings and spectrum.
    Loadings(Common),
    /// Play one episode, randomly or greedily over a saved policy, and write its event log.
    Play {
        #[command(flatten)]
        common: Common,
        /// level seed
        #[arg(long, default_value_t = 0)]
        level: u64,
        /// policy JSON written by `sweep --debug`
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Write the demonstration set as CSV.
    Collect(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults apply to missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// master seed
    #[arg(long)]
    seed: Option<u64>,
    /// manifold dimensions, e.g. `1,2,4`
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    /// worker threads
    #[arg(long, env = "MANIFOLD_RL_JOBS")]
    jobs: Option<usize>,
    /// keep per-trial returns and trial-1 policies
    #[arg(long)]
    debug: bool,
}

impl Common {
    fn resolve(&self) -> Result<HarnessConfig> {
        let mut cfg = match &self.config {
            Some(path) => HarnessConfig::load(path)?,
            None => HarnessConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.pipeline.master_seed = seed;
        }
        if let Some(dims) = &self.dims {
            cfg.dims = dims.clone();
        }
        if let Some(trials) = self.trials {
            cfg.pipeline.trials = trials;
        }
        if let Some(episodes) = self.episodes {
            cfg.pipeline.episodes = episodes;
        }
        if self.jobs.is_some() {
            cfg.jobs = self.jobs;
        }
        cfg.debug |= self.debug;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(common) => {
            let cfg = common.resolve()?;
            let result = cmd_sweep(&cfg, &common.out)?;
            for curve in &result.curves {
                let (m, se) = result.final_window(curve.id).context("missing window")?;
                println!("{:>4}  final-window mean {m:10.2}  stderr {se:8.2}", curve.id.label());
            }
            println!("wrote {} ({:.1}s)", common.out.display(), result.wall_time_secs);
        }
        Command::Loadings(common) => {
            let cfg = common.resolve()?;
            let report = cmd_loadings(&cfg, &common.out)?;
            println!("fitted on {} samples; wrote {}", report.samples, common.out.display());
        }
        Command::Play { common, level, policy } => {
            let cfg = common.resolve()?;
            let report = cmd_play(&cfg, level, policy.as_deref(), &common.out)?;
            let r = report.record;
            println!("level {level}: {} after {} steps, return {}", r.cause.as_str(), r.steps, r.total_return);
            if let Some(path) = report.event_log {
                println!("wrote {}", path.display());
            }
        }
        Command::Collect(common) => {
            let cfg = common.resolve()?;
            let demos = cmd_collect(&cfg, &common.out)?;
            if demos.observations.rows() == 0 {
                bail!("no demonstrations collected");
            }
            println!("{} rows; wrote {}", demos.observations.rows(), common.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("manifold-rl: {e:#}");
            ExitCode::FAILURE
        }
    }
}
