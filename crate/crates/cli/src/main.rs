use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use modbot_cli::artifacts::{run_experiment, RunOptions};
use modbot_cli::config::ExperimentConfig;
use modbot_cli::{analyze, oracle, render};

#[derive(Parser)]
#[command(name = "modbot", version, about = "Evolve modular robots and measure trait heritability")]
struct Cli {
    /// Worker threads for evaluation and repetitions (default: all cores).
    #[arg(long, env = "MODBOT_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every repetition of an experiment, then analyse and render it.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Also write one trajectory CSV per evaluated individual.
        #[arg(long)]
        dump_trajectories: bool,
        /// Replace results already present in the output directory.
        #[arg(long)]
        force: bool,
    },
    /// Recompute the analysis tables from the run CSVs.
    Analyze { dir: PathBuf },
    /// Draw the SVG figures from the analysis tables.
    Render { dir: PathBuf },
    /// Recompute traits of stored bodies independently of a run.
    OracleTraits {
        /// A bodies_gXX.txt file or plain body text, one per line.
        body_file: PathBuf,
        /// Directory of dumped trajectories; adds speed and balance.
        #[arg(long)]
        trajectories: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    match cli.command {
        Command::Run { config, dump_trajectories, force } => {
            let cfg = ExperimentConfig::load(&config)?;
            let logs = run_experiment(&cfg, &RunOptions { dump_trajectories, force })?;
            let failed: usize = logs.iter().map(|l| l.events.len()).sum();
            eprintln!(
                "{} repetition(s) of {} x {} written to {} ({failed} failed evaluations)",
                logs.len(),
                cfg.population_size,
                cfg.generations,
                cfg.output_dir.display()
            );
        }
        Command::Analyze { dir } => {
            analyze::analyze_dir(&dir)?;
        }
        Command::Render { dir } => {
            let names = render::render_dir(&dir)?;
            eprintln!("{} figures written", names.len());
        }
        Command::OracleTraits { body_file, trajectories } => {
            print!("{}", oracle::run(&body_file, trajectories.as_deref())?);
        }
    }
    Ok(())
}
