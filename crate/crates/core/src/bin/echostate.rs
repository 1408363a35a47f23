use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use echostate::cli::{run_file, Command, Overrides, EXIT_ERROR};

/// Echo-state network experiments driven by a TOML config file.
#[derive(Parser)]
#[command(name = "echostate", version)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// Override the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Contraction certificate for the configured reservoir.
    Certify { config: PathBuf },
    /// Drive the reservoir and write the state trajectory.
    Drive { config: PathBuf },
    /// Paired-trajectory convergence test.
    EspTest { config: PathBuf },
    /// Fading-memory bound and pullback diameter.
    FmpTest { config: PathBuf },
    /// Linear memory capacity spectrum.
    Capacity { config: PathBuf },
    /// Information processing capacity over Legendre functionals.
    Ipc { config: PathBuf },
    /// Conditional Lyapunov spectrum.
    Lyapunov { config: PathBuf },
    /// Grid over spectral radius, input scale and leak rate.
    Sweep { config: PathBuf },
    /// Held-out error against reservoir size.
    Approx { config: PathBuf },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (cmd, path) = match args.command {
        Cmd::Certify { config } => (Command::Certify, config),
        Cmd::Drive { config } => (Command::Drive, config),
        Cmd::EspTest { config } => (Command::EspTest, config),
        Cmd::FmpTest { config } => (Command::FmpTest, config),
        Cmd::Capacity { config } => (Command::Capacity, config),
        Cmd::Ipc { config } => (Command::Ipc, config),
        Cmd::Lyapunov { config } => (Command::Lyapunov, config),
        Cmd::Sweep { config } => (Command::Sweep, config),
        Cmd::Approx { config } => (Command::Approx, config),
    };
    let overrides = Overrides {
        seed: args.seed,
        out_dir: args.out,
    };
    match run_file(cmd, &path, &overrides) {
        Ok(outcome) => {
            println!("{}: {}", cmd.name(), outcome.summary);
            for f in &outcome.files {
                println!("  wrote {}", f.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("echostate {}: {e}", cmd.name());
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
