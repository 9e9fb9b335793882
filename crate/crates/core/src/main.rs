use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use tresca::cli::{run_command, Command};
use tresca::config::load_config;

#[derive(Parser)]
#[command(
    name = "tresca",
    version,
    about = "Friction-boundary parabolic solver, optimal control, and property battery"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV reports (defaults to the config's output_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the state problem and dump the trajectory
    Solve(RunArgs),
    /// Run the full property battery
    Verify(RunArgs),
    /// Robin-to-Dirichlet state convergence sweep
    SweepH(RunArgs),
    /// Regularization convergence sweep
    SweepEps(RunArgs),
    /// Minimize the cost over the control
    Optimize(RunArgs),
    /// Convergence of the Robin optimal controls to the Dirichlet one
    ConvergeControl(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::SweepH(a) => (Command::SweepH, a),
        Cmd::SweepEps(a) => (Command::SweepEps, a),
        Cmd::Optimize(a) => (Command::Optimize, a),
        Cmd::ConvergeControl(a) => (Command::ConvergeControl, a),
    };

    let mut cfg = match load_config(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir));

    match run_command(command, &cfg, &out_dir) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed; see the CSV reports in {}", out_dir.display());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
