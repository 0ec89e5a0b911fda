use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use modfix::cli::{run_certificate, run_check, run_solve, CliError, EXIT_USAGE};
use modfix::config::ProblemConfig;

#[derive(Debug, Parser)]
#[command(
    name = "modfix",
    version,
    about = "Contractions and fixed points in modular spaces"
)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Problem configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the seed from the configuration
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the output directory from the configuration
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress the one-line summary on stdout
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the modular axioms, s-convexity, doubling constant and Fatou property
    Check,
    /// Verify the contraction and run Picard iteration
    Solve,
    /// Build and verify a chain certificate
    Certificate,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let Some(path) = &args.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(EXIT_USAGE as u8);
    };
    let mut cfg = match ProblemConfig::load(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out_dir = args.out.clone().unwrap_or_else(|| cfg.out_dir.clone());

    let result: Result<_, CliError> = match args.command {
        Command::Check => run_check(&cfg, &out_dir),
        Command::Solve => run_solve(&cfg, &out_dir),
        Command::Certificate => run_certificate(&cfg, &out_dir),
    };
    match result {
        Ok(outcome) => {
            if !args.quiet {
                println!("{}", outcome.message);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
