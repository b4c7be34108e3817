use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rodbreak::cli;

/// Wave-breaking laboratory for the hyperelastic rod / Camassa-Holm family.
#[derive(Parser)]
#[command(name = "rodbreak", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the breakdown criterion battery on the configured datum.
    Analyze(CommonArgs),
    /// Evolve the datum in time and trace characteristics.
    Simulate(CommonArgs),
    /// Sweep gamma/profile combinations, or emit the beta table.
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overridden by `output_dir` in the config).
    #[arg(long)]
    out: PathBuf,
    /// Replace configured characteristic seeds by N uniformly spaced ones.
    #[arg(long)]
    seed_grid: Option<usize>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, kind) = match &cli.command {
        Command::Analyze(a) => (a, "analyze"),
        Command::Simulate(a) => (a, "simulate"),
        Command::Sweep(a) => (a, "sweep"),
    };
    let config = match cli::load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("rodbreak: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = match kind {
        "analyze" => cli::analyze(&config, &args.out, args.quiet),
        "simulate" => cli::simulate(&config, &args.out, args.seed_grid, args.quiet),
        _ => cli::sweep(&config, &args.out, args.quiet),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rodbreak: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
