//! `winsize`: win probabilities, power, sample size, correlation sweeps and
//! simulation checks for prioritized time-to-event endpoints.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
//! 3 numerical failure or infeasible design.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Failure;
use crate::config::{Format, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "winsize", version, about = "Win ratio design calculator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-endpoint win/loss probabilities, tie probability and win ratio.
    Winprob(Common),
    /// Power at the configured total sample size.
    Power(Common),
    /// Total sample size for the configured power.
    Samplesize(Common),
    /// Sweep Kendall tau and study length.
    Grid(Common),
    /// Monte Carlo check of the formulas.
    Simulate(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Write the result here instead of standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Output format (overrides the config).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Master seed for simulate (overrides sim.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Winprob(a) => ("winprob", a),
        Command::Power(a) => ("power", a),
        Command::Samplesize(a) => ("samplesize", a),
        Command::Grid(a) => ("grid", a),
        Command::Simulate(a) => ("simulate", a),
    };
    match run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("winsize {name}: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(name: &str, args: &Common) -> Result<(), (u8, String)> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err((2, "--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| (1, format!("cannot start thread pool: {e}")))?;
    }
    let mut cfg = RunConfig::load(&args.config).map_err(|e| (2, e.to_string()))?;
    if let Some(seed) = args.seed {
        if let Some(sim) = cfg.sim.as_mut() {
            sim.seed = seed;
        }
    }
    if args.dump_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let result = match name {
        "winprob" => commands::winprob(&cfg),
        "power" => commands::power(&cfg),
        "samplesize" => commands::samplesize(&cfg),
        "grid" => commands::grid(&cfg),
        "simulate" => commands::simulate(&cfg, args.seed),
        _ => unreachable!("clap restricts subcommands"),
    };
    let table = result.map_err(|f| match f {
        Failure::Config(e) => (2, e.to_string()),
        Failure::Core(e) if e.is_numerical() => (3, e.to_string()),
        Failure::Core(e) => (2, e.to_string()),
    })?;
    let output = cfg.output.clone().unwrap_or_default();
    let format = args.format.or(output.format).unwrap_or(Format::Txt);
    let text = table.render(format);
    match args.out.clone().or(output.path) {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| (1, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
