use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use regime_asian_cli::{run, Command};

#[derive(Parser)]
#[command(name = "regime-asian", version, about = "Floating-strike Asian options under regime switching")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Also write the config with every default filled in.
    #[arg(long)]
    emit_config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Price with the single configured method.
    Price(Common),
    /// One row per configured method.
    Compare(Common),
    /// HAM partial sums for the European and zero initial guesses.
    Convergence(Common),
    /// Monte Carlo check of the fixed/floating symmetry.
    SymmetryCheck(Common),
}

fn thread_cap() -> Result<(), String> {
    let Ok(v) = std::env::var("PRICER_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("PRICER_THREADS={v:?} is not a thread count"))?;
    if n == 0 {
        return Err("PRICER_THREADS must be >= 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = thread_cap() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let (cmd, common) = match cli.command {
        Cmd::Price(c) => (Command::Price, c),
        Cmd::Compare(c) => (Command::Compare, c),
        Cmd::Convergence(c) => (Command::Convergence, c),
        Cmd::SymmetryCheck(c) => (Command::SymmetryCheck, c),
    };
    match run(cmd, &common.config, common.emit_config.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
