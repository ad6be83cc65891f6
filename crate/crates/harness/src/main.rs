use clap::{Parser, Subcommand};
use qwalk_harness::{run_files, Command, Overrides, EXIT_OK, EXIT_VALIDATION};
use std::path::PathBuf;
use std::process::ExitCode;

/// Quantum walks on joined half lines: simulation, closed-form predictions and checks.
#[derive(Debug, Parser)]
#[command(name = "qwalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON experiment config; repeat to run several configs in parallel.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    /// CSV output path (defaults to the config's "output", else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time horizon; overrides t_max.
    #[arg(long)]
    t: Option<usize>,
    /// Seed for random coins and states; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance for the check subcommands.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Simulate P(X_{t,r} = x) on the reduced (or direct) walk.
    Simulate(Common),
    /// Closed-form localization terms and limit masses.
    Theory(Common),
    /// Simulation against localization predictions (fig2/fig3 modes).
    Compare(Common),
    /// Generating-function coefficients against walk amplitudes.
    GenfunCheck(Common),
    /// Scaled distribution X_t/t against the weak-limit density.
    ScaledDist(Common),
    /// Tree walk against the reduced walk on joined half lines.
    TreeCheck(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION as u8 } else { EXIT_OK as u8 });
        }
    };
    let (cmd, common) = match cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Theory(c) => (Command::Theory, c),
        Cmd::Compare(c) => (Command::Compare, c),
        Cmd::GenfunCheck(c) => (Command::GenfunCheck, c),
        Cmd::ScaledDist(c) => (Command::ScaledDist, c),
        Cmd::TreeCheck(c) => (Command::TreeCheck, c),
    };
    let ov = Overrides { t: common.t, seed: common.seed, tolerance: common.tolerance };
    let mut code = EXIT_OK;
    for (path, res) in common.config.iter().zip(run_files(cmd, &common.config, common.out.as_deref(), &ov)) {
        let c = match res {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                EXIT_VALIDATION
            }
        };
        code = code.max(c);
    }
    ExitCode::from(code as u8)
}
