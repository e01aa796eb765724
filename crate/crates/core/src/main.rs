use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_gbs::cli::{cmd_optimize, cmd_report, cmd_simulate, cmd_sweep_loss, render_report, RunOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adaptive-gbs", version, about = "Heralded non-Gaussian state sources: simulate, optimize, sweep loss")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the configured parameters.
    Simulate(Common),
    /// Optimize the free parameters and evaluate the result.
    Optimize(Common),
    /// Evaluate under each configured loss fraction.
    SweepLoss(Common),
    /// Print a human-readable summary.
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Scheme JSON replacing the config's scheme, as written by `optimize`.
    #[arg(long)]
    params: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Optimize(a) => ("optimize", a),
        Command::SweepLoss(a) => ("sweep-loss", a),
        Command::Report(a) => ("report", a),
    };
    let opts = RunOptions { seed: args.seed, out_dir: args.out_dir, params: args.params };
    let result = match cmd {
        "simulate" => cmd_simulate(&args.config, &opts).map(|s| print!("{}", render_report(&s))),
        "optimize" => cmd_optimize(&args.config, &opts).map(|s| print!("{}", render_report(&s))),
        "sweep-loss" => cmd_sweep_loss(&args.config, &opts).map(|rows| {
            for r in rows {
                let f = r.fidelity.map_or("-".into(), |f| format!("{f:.6}"));
                println!("{:.4} {:<12} {:.6e} {}", r.loss, r.branch, r.probability, f);
            }
        }),
        _ => cmd_report(&args.config, &opts).map(|t| print!("{t}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
