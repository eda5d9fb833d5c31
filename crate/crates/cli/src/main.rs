//! `snapout`: simulate reflected paths with semipermeable barriers, recover
//! the barriers from samples and score the result.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use snapout::estimators::Regime;

use crate::commands::Ctx;
use crate::config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "snapout", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed to run; repeatable. Replaces the config's seed list.
    #[arg(long = "seed", global = true)]
    seeds: Vec<u64>,

    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one sample path per seed.
    Simulate,
    /// Recover barriers with the regime from the config (fixed-freq by default).
    Recover {
        /// Path files, pooled; defaults to the config or to the seeds' paths.
        paths: Vec<PathBuf>,
    },
    /// Refine an earlier estimate.
    Refine {
        #[arg(long)]
        initial: Option<PathBuf>,
        paths: Vec<PathBuf>,
    },
    /// Recover barriers from high-frequency samples.
    RecoverHf { paths: Vec<PathBuf> },
    /// Monte-Carlo cover times of the outer boundary.
    Covertime,
    /// Hausdorff distance of estimates to the configured barriers.
    Eval { estimates: Vec<PathBuf> },
    /// Load, project and resample a track file.
    Ingest,
}

fn run(cli: Cli) -> Result<()> {
    let (cfg, raw) = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => (ExperimentConfig::default(), String::new()),
    };
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let seeds = if cli.seeds.is_empty() { cfg.seeds.clone() } else { cli.seeds.clone() };
    let ctx = Ctx { cfg, raw, out, seeds, quiet: cli.quiet };
    match &cli.command {
        Command::Simulate => commands::simulate_cmd(&ctx),
        Command::Recover { paths } => commands::recover_cmd(&ctx, None, paths, None),
        Command::Refine { initial, paths } => {
            commands::recover_cmd(&ctx, Some(Regime::Refined), paths, initial.as_deref())
        }
        Command::RecoverHf { paths } => commands::recover_cmd(&ctx, Some(Regime::HighFreq), paths, None),
        Command::Covertime => commands::covertime_cmd(&ctx),
        Command::Eval { estimates } => commands::eval_cmd(&ctx, estimates),
        Command::Ingest => commands::ingest_cmd(&ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
