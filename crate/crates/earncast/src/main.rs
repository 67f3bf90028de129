use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use earncast::commands::{cmd_backtest, cmd_report, cmd_synth};
use earncast::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "earncast", version, about = "Quarterly earnings-direction backtests")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true, default_value = "earncast.toml")]
    config: PathBuf,
    /// Subsets run in parallel.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic panel to the configured input paths.
    Synth,
    /// Run the rolling backtest and write reports.
    Backtest,
    /// Re-render report.txt from report.jsonl.
    Report {
        /// Defaults to the configured output directory.
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    match cli.command {
        Command::Synth => {
            let out = cmd_synth(&cfg)?;
            println!("panel written to {}", out.panel.display());
        }
        Command::Backtest => {
            let out = cmd_backtest(&cfg, cli.jobs)?;
            println!("{} subsets; report at {}", out.n_subsets, out.report_txt.display());
        }
        Command::Report { results } => {
            print!("{}", cmd_report(&cfg, results.as_deref())?);
        }
    }
    Ok(())
}
