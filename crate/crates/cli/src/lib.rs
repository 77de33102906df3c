//! Command line front end for the point-vortex laboratory.
//!
//! The binary is `vortex-lab`; see the subcommand modules for what each one
//! does and `docs/config.md` / `docs/file-formats.md` for the configuration
//! grammar and the emitted file schemas. Everything the tool writes is
//! deterministic: the same configuration produces byte-identical files.

pub mod classify;
pub mod config;
pub mod curve;
pub mod error;
pub mod output;
pub mod reduce;
pub mod run;
pub mod sweep;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "vortex-lab",
    version,
    about = "Numerical laboratory for the planar point-vortex problem (up to four vortices)",
    after_help = "Exit codes: 0 ok, 1 usage, 2 runtime failure, 3 sweep finished partially.\n\
                  Errors are printed to stderr as one JSON line.\n\
                  VORTEX_LAB_OUTPUT_DIR overrides the configured output directory."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configured scenario and write trajectory.csv,
    /// shape.csv, report.json, and run_meta.json.
    Run {
        /// Configuration file (TOML; see docs/config.md).
        config: PathBuf,
    },
    /// Run a configuration template over the [sweep] parameter grid and
    /// write one summary.csv row per run.
    Sweep {
        /// Configuration template with a [sweep] section.
        config: PathBuf,
    },
    /// Re-run collision classification on a stored trajectory.csv.
    Classify {
        /// A trajectory.csv file or a run directory containing one.
        path: PathBuf,
        /// Comma-separated strengths; defaults to the run_meta.json next to
        /// the trajectory.
        #[arg(long)]
        strengths: Option<String>,
        /// "Reached zero" threshold of the classifier.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the bounded-collapse constraint curve of the symmetric
    /// configuration class.
    #[command(allow_negative_numbers = true)]
    ParallelogramCurve {
        /// Strength of the outer pair (pattern g1, g2, g2, g1).
        #[arg(long)]
        g1: f64,
        /// Strength of the inner pair; must have the opposite sign of g1.
        #[arg(long)]
        g2: f64,
        /// Normalized energy constant of the constraint.
        #[arg(long, default_value_t = 1.0)]
        energy_h: f64,
        /// Number of log-spaced samples.
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Lower end of the parameter range (default: the realizable range).
        #[arg(long)]
        p_min: Option<f64>,
        /// Upper end of the parameter range (default: the realizable range).
        #[arg(long)]
        p_max: Option<f64>,
        /// Write the samples here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a four-vortex scenario, verify the binary-pair chart round
    /// trip, and compare the averaged slow flow against the full run.
    Reduce {
        /// Configuration file (TOML; see docs/config.md).
        config: PathBuf,
    },
}

fn dispatch(command: Command) -> CliResult<Option<String>> {
    match command {
        Command::Run { config } => {
            let dir = run::run_command(&config)?;
            Ok(Some(format!(
                "run: wrote trajectory.csv, shape.csv, report.json, run_meta.json in {}",
                dir.display()
            )))
        }
        Command::Sweep { config } => {
            let (dir, total, _) = sweep::sweep_command(&config)?;
            Ok(Some(format!("sweep: {total} runs into {} (summary.csv)", dir.display())))
        }
        Command::Classify { path, strengths, eps, out } => {
            classify::classify_command(&classify::ClassifyArgs { path, strengths, eps, out })
        }
        Command::ParallelogramCurve { g1, g2, energy_h, points, p_min, p_max, out } => {
            curve::curve_command(&curve::CurveArgs { g1, g2, energy_h, points, p_min, p_max, out })
        }
        Command::Reduce { config } => {
            let dir = reduce::reduce_command(&config)?;
            Ok(Some(format!("reduce: wrote reduced.csv, reduction.json in {}", dir.display())))
        }
    }
}

/// Parses the command line, runs the command, and returns the exit code.
pub fn run_cli() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if err.exit_code() == 0 => {
            print!("{err}");
            return 0;
        }
        Err(err) => {
            eprintln!("{}", CliError::Usage(err.to_string()).to_json());
            return 1;
        }
    };
    match dispatch(cli.command) {
        Ok(Some(message)) => {
            println!("{message}");
            0
        }
        Ok(None) => 0,
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}
