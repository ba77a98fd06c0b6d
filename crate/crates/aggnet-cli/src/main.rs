//! `aggnet`: parameter sweeps and simulations for social learning with AI
//! aggregators.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure (the
//! library error name is printed to stderr).

mod config;
mod run;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RawConfig;
use run::{Mode, RunError};

#[derive(Parser)]
#[command(
    name = "aggnet",
    version,
    about = "Social learning with AI aggregators: closed forms, robustness sets, simulations",
    long_about = None,
    after_help = "Parameter precedence: config file < --set overrides < --seed flag.\n\
        Scalars: --set h=2.5   Ranges: --set h=1.1:100:50:log (lo:hi:steps:scale).\n\
        In robust-set and rho-star modes the h range gives the homophily bounds\n\
        and its step count is the inner grid size."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Consensus with a global aggregator on the expected two-island network
    Consensus(RunArgs),
    /// Learning gaps with and without the aggregator, and their difference
    Gap(RunArgs),
    /// Homophily regime classification with numeric thresholds
    Regime(RunArgs),
    /// Robustly improving training weights over a homophily range
    RobustSet(RunArgs),
    /// Updating-speed threshold separating empty from positive-measure robust sets
    RhoStar(RunArgs),
    /// Local aggregators against no aggregation and against a global design
    LocalCompare(RunArgs),
    /// Sample a two-island network and simulate the global-aggregator dynamics
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file with parameter values and ranges
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one parameter: key=value or key=lo:hi:steps:scale
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output path; - writes to stdout
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Random seed (overrides the config file)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also write the full belief trajectory (single-point configs only)
    #[arg(long, value_name = "PATH")]
    trajectory_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args, trajectory_out) = match &cli.command {
        Command::Consensus(a) => (Mode::Consensus, a, None),
        Command::Gap(a) => (Mode::Gap, a, None),
        Command::Regime(a) => (Mode::Regime, a, None),
        Command::RobustSet(a) => (Mode::RobustSet, a, None),
        Command::RhoStar(a) => (Mode::RhoStar, a, None),
        Command::LocalCompare(a) => (Mode::LocalCompare, a, None),
        Command::Simulate(a) => (Mode::Simulate, &a.run, a.trajectory_out.as_deref()),
    };
    match execute(mode, args, trajectory_out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Config(_) => ExitCode::from(2),
                RunError::Numerical(_) => ExitCode::from(3),
            }
        }
    }
}

fn execute(
    mode: Mode,
    args: &RunArgs,
    trajectory_out: Option<&std::path::Path>,
) -> Result<(), RunError> {
    let cfg = RawConfig::load(args.config.as_deref(), &args.set, args.seed)
        .map_err(RunError::Config)?;
    let table = run::run(mode, &cfg)?;
    let rendered = match args.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    write_output(&args.out, &rendered)?;
    if let Some(path) = trajectory_out {
        let csv = run::simulate_trajectory(&cfg)?;
        std::fs::write(path, csv).map_err(|e| {
            RunError::Config(format!("cannot write {}: {e}", path.display()))
        })?;
    }
    Ok(())
}

fn write_output(out: &str, rendered: &str) -> Result<(), RunError> {
    if out == "-" {
        print!("{rendered}");
        Ok(())
    } else {
        std::fs::write(out, rendered)
            .map_err(|e| RunError::Config(format!("cannot write {out}: {e}")))
    }
}
