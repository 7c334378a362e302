//! Batch runner for nudge-vs-FCFS queueing experiments.
//!
//! Subcommands:
//! - `check`  — analytic improvement-regime report for a config
//!   (exit 0 when the asymptotic tail improves, 2 when it does not);
//! - `run`    — simulate the configured policies, write CSVs + manifest;
//! - `figure` — bundled curve collections (`fig2`, `fig3`, `fig4`);
//! - `table1` — analytic-vs-simulated improvement sign table.
//!
//! All outputs are deterministic functions of config + seed; rerunning a
//! command reproduces every artifact byte for byte. The environment
//! variable `NUDGEQ_THREADS` caps the parallel replication workers.

mod config;
mod figures;
mod output;
mod run;
mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use config::{ExperimentConfig, Overrides, Resolved};

#[derive(Parser)]
#[command(
    name = "nudgeq",
    version,
    about = "M/G/1 tail-improvement experiments: nudge scheduling vs FCFS"
)]
struct Cli {
    /// Experiment config file (JSON); required by `check` and `run`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Total arrivals across replications (overrides the config file).
    #[arg(long, global = true)]
    arrivals: Option<u64>,
    /// Parallel replications to split the arrivals over.
    #[arg(long, global = true)]
    replications: Option<u32>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the analytic improvement report for the configured setup.
    Check,
    /// Simulate every configured policy and write the artifact bundle.
    Run,
    /// Reproduce a bundled figure's tail-improvement curves.
    Figure {
        #[arg(value_enum)]
        name: FigureName,
    },
    /// Reproduce the improvement sign table (5 distributions x 5 cutoffs).
    Table1 {
        /// Only the first two rows, at reduced scale.
        #[arg(long)]
        smoke: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureName {
    Fig2,
    Fig3,
    Fig4,
}

impl FigureName {
    fn as_str(self) -> &'static str {
        match self {
            FigureName::Fig2 => "fig2",
            FigureName::Fig3 => "fig3",
            FigureName::Fig4 => "fig4",
        }
    }
}

/// Scale knobs for the bundled commands (which have no config file).
pub struct RunScale {
    pub n_arrivals: u64,
    pub arrivals_overridden: bool,
    pub seed: u64,
    pub replications: u32,
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: &Cli) -> Result<i32, String> {
    match &cli.command {
        Command::Check => run::cmd_check(&load_config(cli)?),
        Command::Run => run::cmd_run(&load_config(cli)?),
        Command::Figure { name } => {
            let (scale, dir) = bundled_scale(cli);
            figures::cmd_figure(name.as_str(), &scale, &dir)
        }
        Command::Table1 { smoke } => {
            let (scale, dir) = bundled_scale(cli);
            table::cmd_table1(*smoke, &scale, &dir)
        }
    }
}

fn load_config(cli: &Cli) -> Result<Resolved, String> {
    let path = cli
        .config
        .as_ref()
        .ok_or("this subcommand needs --config FILE")?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let raw = ExperimentConfig::from_json_str(&text)?;
    raw.resolve(&Overrides {
        seed: cli.seed,
        arrivals: cli.arrivals,
        replications: cli.replications,
        out_dir: cli.out_dir.clone(),
    })
}

fn bundled_scale(cli: &Cli) -> (RunScale, PathBuf) {
    let scale = RunScale {
        n_arrivals: cli.arrivals.unwrap_or(config::DEFAULT_ARRIVALS),
        arrivals_overridden: cli.arrivals.is_some(),
        seed: cli.seed.unwrap_or(config::DEFAULT_SEED),
        replications: cli.replications.unwrap_or(config::DEFAULT_REPLICATIONS),
    };
    let dir = cli
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("nudgeq_out"));
    (scale, dir)
}
