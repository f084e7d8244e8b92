use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ebm_plan::bench::cli;
use ebm_plan::bench::config::{ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "ebm-bench", about = "Run energy-model planning experiments from a TOML config")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run this single seed instead of the config's seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Offline pretraining on a random-policy dataset, then evaluation.
    Pretrain,
    /// Online training from scratch.
    Online,
    /// Evaluate a checkpoint.
    Eval,
    /// Goal-free exploration against a random policy.
    Explore,
    /// Evaluation with an unseen central obstacle.
    ObstacleGen,
    /// Shuffled against sequential-repeated pretraining.
    AblationCorrelated,
    /// Plan spread over several horizons.
    Diversity,
    /// Energy and visitation maps.
    Heatmap,
}

impl From<Command> for ExperimentKind {
    fn from(c: Command) -> Self {
        match c {
            Command::Pretrain => ExperimentKind::Pretrain,
            Command::Online => ExperimentKind::Online,
            Command::Eval => ExperimentKind::Eval,
            Command::Explore => ExperimentKind::Explore,
            Command::ObstacleGen => ExperimentKind::ObstacleGen,
            Command::AblationCorrelated => ExperimentKind::CorrelatedAblation,
            Command::Diversity => ExperimentKind::Diversity,
            Command::Heatmap => ExperimentKind::Heatmap,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = (|| {
        let mut cfg = match &args.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = args.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(out) = &args.out {
            cfg.out = out.clone();
        }
        cli::run(args.command.into(), &cfg, args.quiet)
    })();
    match result {
        Ok(files) => {
            if !args.quiet {
                for f in files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ebm-bench: {e}");
            ExitCode::FAILURE
        }
    }
}
