//! `posobs`: design, certify and simulate positive interval observers with
//! stabilizing feedback for discrete-time positive linear systems.
//!
//! Exit codes: 0 when all requested verdicts pass, 1 when a mathematical
//! check fails or synthesis is infeasible, 2 on malformed input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use posobs_cli::commands;

#[derive(Parser)]
#[command(
    name = "posobs",
    about = "Positive interval observers with stabilizing feedback",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a scenario's gains: invariance margins, stability radii and
    /// (when E/F are present) the noise-condition margins.
    Check {
        /// Scenario file (JSON).
        scenario: PathBuf,
        /// Elementwise nonnegativity tolerance (default 1e-9).
        #[arg(long)]
        tol: Option<f64>,
        /// Also check the single-observer necessary conditions for the
        /// extracted pair K = K_upper + K_lower, L = L_lower.
        #[arg(long)]
        generic: bool,
    },
    /// Synthesize observer and feedback gains for a scenario's system.
    Synth {
        /// Scenario file (JSON).
        scenario: PathBuf,
        /// Synthesis mode: thm1 (decoupled, LC >= 0) or coupled (staged).
        #[arg(long)]
        mode: Option<String>,
        /// Also enforce the expectation noise conditions (needs E and F).
        #[arg(long)]
        noise: bool,
        /// Margin floor for all synthesis programs (default 1e-6).
        #[arg(long)]
        eps: Option<f64>,
        /// Write the synthesized gains block (JSON) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the closed loop and write a trajectory CSV.
    Simulate {
        /// Scenario file (JSON); needs system and gains.
        scenario: PathBuf,
        /// Draw process and measurement noise per step (needs E and F).
        #[arg(long)]
        noisy: bool,
        /// Horizon override.
        #[arg(long = "T")]
        horizon: Option<usize>,
        /// Ensemble size override (mean trajectory; needs --noisy).
        #[arg(long = "N")]
        runs: Option<usize>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit every coordinate, not only the first.
        #[arg(long)]
        full: bool,
    },
    /// Compute the expected fixed point of the noisy closed loop.
    FixedPoint {
        /// Scenario file (JSON); needs system with E/F and gains.
        scenario: PathBuf,
    },
    /// Re-run a bundled demo (ex1, ex2 or ex3): certification report plus
    /// trajectory CSV and a gnuplot script.
    Repro {
        /// Demo id: ex1, ex2 or ex3.
        example: String,
        /// Output directory (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::from(0);
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match &cli.command {
        Command::Check {
            scenario,
            tol,
            generic,
        } => commands::cmd_check(scenario, *tol, *generic),
        Command::Synth {
            scenario,
            mode,
            noise,
            eps,
            out,
        } => commands::cmd_synth(scenario, mode.as_deref(), *noise, *eps, out.as_deref()),
        Command::Simulate {
            scenario,
            noisy,
            horizon,
            runs,
            seed,
            out,
            full,
        } => commands::cmd_simulate(
            scenario,
            *noisy,
            *horizon,
            *runs,
            *seed,
            out.as_deref(),
            *full,
        ),
        Command::FixedPoint { scenario } => commands::cmd_fixed_point(scenario),
        Command::Repro { example, out } => commands::cmd_repro(example, out.as_deref()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(input) => {
            eprintln!("error: {input}");
            ExitCode::from(2)
        }
    }
}
