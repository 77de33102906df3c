//! The `classify` subcommand: re-run collision classification on a stored
//! `trajectory.csv` without re-integrating.
//!
//! Strengths are not part of the CSV; they come from `--strengths` or from
//! the `run_meta.json` sitting next to the trajectory file.

use std::path::{Path, PathBuf};

use num_complex::Complex64;

use vortex_core::collisions;
use vortex_core::dynamics::{Termination, Trajectory};
use vortex_core::VortexState;

use crate::config::SCHEMA_VERSION;
use crate::error::{CliError, CliResult};
use crate::output::write_json;

pub struct ClassifyArgs {
    /// A `trajectory.csv` file or a run directory containing one.
    pub path: PathBuf,
    /// Comma-separated strengths overriding the stored metadata.
    pub strengths: Option<String>,
    /// "Reached zero" threshold of the classifier.
    pub eps: f64,
    /// Output file; stdout when absent.
    pub out: Option<PathBuf>,
}

fn resolve_csv(path: &Path) -> CliResult<PathBuf> {
    if path.is_dir() {
        let csv = path.join("trajectory.csv");
        if !csv.is_file() {
            return Err(CliError::usage(format!(
                "{} does not contain a trajectory.csv",
                path.display()
            )));
        }
        return Ok(csv);
    }
    if path.is_file() {
        return Ok(path.to_path_buf());
    }
    Err(CliError::usage(format!("{} is not a file or directory", path.display())))
}

fn parse_strengths_flag(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<f64>().map_err(|_| {
                CliError::usage(format!("bad strengths entry {part:?}; expected a number"))
            })
        })
        .collect()
}

fn strengths_from_meta(csv_path: &Path) -> CliResult<Vec<f64>> {
    let meta_path = csv_path.parent().unwrap_or(Path::new(".")).join("run_meta.json");
    let text = std::fs::read_to_string(&meta_path).map_err(|_| {
        CliError::usage(format!(
            "no --strengths given and no readable {} next to the trajectory",
            meta_path.display()
        ))
    })?;
    let meta: serde_json::Value = serde_json::from_str(&text)
        .map_err(|err| CliError::usage(format!("{}: {err}", meta_path.display())))?;
    let list = meta
        .get("strengths")
        .and_then(|v| v.as_array())
        .ok_or_else(|| {
            CliError::usage(format!("{} has no strengths array", meta_path.display()))
        })?;
    list.iter()
        .map(|v| {
            v.as_f64().ok_or_else(|| {
                CliError::usage(format!("{} has a non-numeric strength", meta_path.display()))
            })
        })
        .collect()
}

/// Reads a stored `trajectory.csv` back into a trajectory.
pub fn read_trajectory(csv_path: &Path, strengths: &[f64]) -> CliResult<Trajectory> {
    let mut reader = csv::Reader::from_path(csv_path)
        .map_err(|err| CliError::usage(format!("{}: {err}", csv_path.display())))?;
    let headers = reader.headers()?.clone();
    let n = headers.iter().filter(|h| h.starts_with('x')).count();
    if n == 0 || headers.get(0) != Some("t") {
        return Err(CliError::usage(format!(
            "{} does not look like a trajectory file (header {:?})",
            csv_path.display(),
            headers
        )));
    }
    if n != strengths.len() {
        return Err(CliError::usage(format!(
            "trajectory has {n} vortices but {} strengths were given",
            strengths.len()
        )));
    }
    let mut states = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |k: usize| -> CliResult<f64> {
            record
                .get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::usage(format!(
                        "{} row {}: bad numeric field {k}",
                        csv_path.display(),
                        line + 2
                    ))
                })
        };
        let t = field(0)?;
        let positions = (0..n)
            .map(|k| Ok(Complex64::new(field(1 + 2 * k)?, field(2 + 2 * k)?)))
            .collect::<CliResult<Vec<_>>>()?;
        states.push(
            VortexState::at_time(positions, strengths.to_vec(), t)
                .map_err(|err| CliError::usage(format!("row {}: {err}", line + 2)))?,
        );
    }
    Trajectory::from_states(states, Termination::TimeLimit)
        .map_err(|err| CliError::usage(err.to_string()))
}

/// Entry point of the `classify` subcommand. Returns the JSON document; the
/// caller prints it or it is written to `--out`.
pub fn classify_command(args: &ClassifyArgs) -> CliResult<Option<String>> {
    if !(args.eps > 0.0) || !args.eps.is_finite() {
        return Err(CliError::usage(format!("--eps must be positive, got {}", args.eps)));
    }
    let csv_path = resolve_csv(&args.path)?;
    let strengths = match &args.strengths {
        Some(text) => parse_strengths_flag(text)?,
        None => strengths_from_meta(&csv_path)?,
    };
    let traj = read_trajectory(&csv_path, &strengths)?;
    let report = collisions::classify(&traj, args.eps)?;
    let document = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": "classify",
        "eps": args.eps,
        "samples": traj.len(),
        "classification": report,
    });
    match &args.out {
        Some(path) => {
            write_json(path, &document)?;
            Ok(Some(format!("classify: wrote {}", path.display())))
        }
        None => {
            let mut text = serde_json::to_string_pretty(&document)?;
            text.push('\n');
            print!("{text}");
            Ok(None)
        }
    }
}
