//! `metaregion` command-line tool.

mod commands;
mod error;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Parser)]
#[command(
    name = "metaregion",
    version,
    about = "Spectral regionalization, risk flags and SEIR scenarios for city networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct CommonArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Leave timestamps out of generated SVG files.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset with planted block structure.
    Generate(commands::GenerateArgs),
    /// Export an affinity matrix and its normalized-Laplacian spectrum.
    Affinity(commands::AffinityArgs),
    /// Partition cities by normalized-cut spectral clustering.
    Cluster(commands::ClusterArgs),
    /// Score fixed and weekly re-clustered regions with a flag formula.
    Flags(commands::FlagsArgs),
    /// Run an SEIR scenario seeded from the case panel.
    Simulate(commands::SimulateArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            e.exit()
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            return report(&CliError::usage(first.trim_start_matches("error: ")));
        }
    };
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a, args),
        Command::Affinity(a) => commands::affinity(a, args),
        Command::Cluster(a) => commands::cluster(a, args),
        Command::Flags(a) => commands::flags(a, args),
        Command::Simulate(a) => commands::simulate(a, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> ExitCode {
    let message = e.to_string().replace(['\n', '\r'], " ");
    eprintln!("error[{}]: {message}", e.kind());
    ExitCode::from(e.exit_code())
}
