use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tilewave_cli::{load_config, run_command, CliError, Command};

#[derive(Parser)]
#[command(name = "tilewave", version, about = "Folded eigenbases, wave simulation and observability on tiled domains")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Build (or load from cache) the eigenbasis and write basis.csv.
    BuildBasis(Common),
    /// Check coverage, overlaps and sign admissibility of a tiling.
    CheckTiling(Common),
    /// Enumerate admissible sign vectors of a tiling.
    FindSigns(Common),
    /// Evolve seeded initial data and sample u on a grid.
    Simulate(Common),
    /// Observed energy of seeded initial data for each horizon.
    Observe(Common),
    /// Compare triangle-side and rectangle-side observability.
    VerifyEquivalence(Common),
    /// Observability constants for each horizon.
    EstimateConstants(Common),
}

#[derive(Args)]
struct Common {
    /// Config file.
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn run(cmd: Command, args: &Common) -> Result<i32, CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = dir.clone();
    }
    let outcome = run_command(cmd, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&outcome.report).map_err(CliError::numerical)?);
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match &cli.command {
        Sub::BuildBasis(a) => (Command::BuildBasis, a),
        Sub::CheckTiling(a) => (Command::CheckTiling, a),
        Sub::FindSigns(a) => (Command::FindSigns, a),
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::Observe(a) => (Command::Observe, a),
        Sub::VerifyEquivalence(a) => (Command::VerifyEquivalence, a),
        Sub::EstimateConstants(a) => (Command::EstimateConstants, a),
    };
    let code = match run(cmd, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({"command": cmd.name(), "error": e.kind(), "message": e.to_string()}));
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
