//! The `run` subcommand: integrate one configured scenario and emit
//! `trajectory.csv`, `shape.csv`, `report.json`, and `run_meta.json`.

use std::path::{Path, PathBuf};

use serde::Serialize;

use vortex_core::collisions::{self, BoundReport, CollapseCondition, CollisionReport};
use vortex_core::dynamics::{self, Termination, Trajectory};
use vortex_core::parallelogram::{self, PreservationReport};
use vortex_core::state::{virial, InvariantSet};

use crate::config::{Config, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};
use crate::output::{write_json, write_shape_csv, write_trajectory_csv};
use crate::reduce::{self, ReductionComparison};

/// Relative drift of each conserved quantity over a trajectory, with a unit
/// floor on the denominators.
#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub energy: f64,
    pub angular_impulse: f64,
    pub moment_abs: f64,
    pub m: f64,
    pub worst: f64,
}

/// The admissibility table for bounded partial collapse, evaluated from the
/// strengths and the conserved M of the run.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionTable {
    pub m: f64,
    pub virial: f64,
    pub entries: Vec<CollapseCondition>,
}

/// One optional analysis: either its report or the reason it was skipped.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis<T> {
    pub report: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl<T> Analysis<T> {
    fn from_result(result: Result<T, vortex_core::VortexError>) -> Self {
        match result {
            Ok(report) => Analysis { report: Some(report), note: None },
            Err(err) => Analysis { report: None, note: Some(err.to_string()) },
        }
    }
}

/// The content of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub termination: Termination,
    pub t_final: f64,
    pub samples: usize,
    pub initial_invariants: InvariantSet,
    pub invariant_drift: DriftReport,
    pub min_pair_distance: f64,
    /// Present for four-vortex runs only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Analysis<CollisionReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta12_bound: Option<Analysis<BoundReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parallelogram: Option<Analysis<PreservationReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction: Option<Analysis<ReductionComparison>>,
}

/// The content of `run_meta.json`: enough to reproduce and re-analyze the
/// run without the original command line. No timestamps, by design.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub schema_version: u32,
    pub command: String,
    pub generator: String,
    pub strengths: Vec<f64>,
    pub initial_positions: Vec<[f64; 2]>,
    pub files: Vec<String>,
    pub config: Config,
}

/// Per-quantity relative drift with a unit floor, plus the maximum.
pub fn drift_report(traj: &Trajectory) -> DriftReport {
    let first = &traj.first().invariants;
    let rel = |now: f64, then: f64| (now - then).abs() / then.abs().max(1.0);
    let mut report = DriftReport {
        energy: 0.0,
        angular_impulse: 0.0,
        moment_abs: 0.0,
        m: 0.0,
        worst: 0.0,
    };
    for sample in &traj.samples {
        let inv = &sample.invariants;
        report.energy = report.energy.max(rel(inv.energy, first.energy));
        report.angular_impulse =
            report.angular_impulse.max(rel(inv.angular_impulse, first.angular_impulse));
        report.moment_abs = report.moment_abs.max(rel(inv.moment.norm(), first.moment.norm()));
        report.m = report.m.max(rel(inv.m_pair_sum, first.m_pair_sum));
    }
    report.worst = report.energy.max(report.angular_impulse).max(report.moment_abs).max(report.m);
    report
}

/// Integrates the configured scenario and assembles the report.
pub fn execute(config: &Config) -> CliResult<(Trajectory, RunReport)> {
    let state = config.initial_state()?;
    let traj = dynamics::integrate(&state, config.integrator.t_end, &config.integrator.integrator_config())?;
    if traj.len() == 1 && traj.termination != Termination::TimeLimit {
        return Err(CliError::runtime(format!(
            "the initial configuration stops the integrator immediately ({:?} at t = 0); \
             nothing to report",
            traj.termination
        )));
    }
    let report = build_report(config, &traj)?;
    Ok((traj, report))
}

fn build_report(config: &Config, traj: &Trajectory) -> CliResult<RunReport> {
    let strengths = traj.strengths();
    let n = strengths.len();
    let initial = traj.first().invariants.clone();
    let analysis = &config.analysis;

    let conditions = if n == 4 {
        let arr: [f64; 4] = strengths.try_into().expect("length checked");
        Some(ConditionTable {
            m: initial.m_pair_sum,
            virial: virial(&arr)?,
            entries: collisions::necessary_conditions(&arr, initial.m_pair_sum)?,
        })
    } else {
        None
    };

    let classification = analysis
        .classify
        .then(|| Analysis::from_result(collisions::classify(traj, analysis.classify_eps)));
    let beta12_bound = analysis.beta12_bound.then(|| {
        Analysis::from_result(collisions::beta12_virial_bound(
            traj,
            (analysis.bound_pair[0], analysis.bound_pair[1]),
        ))
    });
    let parallelogram = analysis
        .parallelogram
        .then(|| Analysis::from_result(parallelogram::check_preservation(traj)));
    let reduction = if analysis.reduction {
        Some(match reduce::compare(traj, analysis.envelope, &config.integrator) {
            Ok(cmp) => Analysis { report: Some(cmp), note: None },
            Err(err) => Analysis { report: None, note: Some(err.message().to_string()) },
        })
    } else {
        None
    };

    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        termination: traj.termination,
        t_final: traj.last().time,
        samples: traj.len(),
        initial_invariants: initial,
        invariant_drift: drift_report(traj),
        min_pair_distance: traj
            .min_pair_distance
            .iter()
            .fold(f64::INFINITY, |acc, d| acc.min(*d)),
        conditions,
        classification,
        beta12_bound,
        parallelogram,
        reduction,
    })
}

/// Runs a scenario and writes the four output files into `out_dir`.
pub fn run_into(config: &Config, out_dir: &Path) -> CliResult<RunReport> {
    let (traj, report) = execute(config)?;
    std::fs::create_dir_all(out_dir)?;
    write_trajectory_csv(&out_dir.join("trajectory.csv"), &traj)?;
    write_shape_csv(&out_dir.join("shape.csv"), &traj)?;
    write_json(&out_dir.join("report.json"), &report)?;
    let initial = &traj.first().state;
    let meta = RunMeta {
        schema_version: SCHEMA_VERSION,
        command: "run".to_string(),
        generator: config.scenario.positions.generator_name().to_string(),
        strengths: traj.strengths().to_vec(),
        initial_positions: initial.positions.iter().map(|z| [z.re, z.im]).collect(),
        files: ["trajectory.csv", "shape.csv", "report.json", "run_meta.json"]
            .map(String::from)
            .to_vec(),
        config: config.clone(),
    };
    write_json(&out_dir.join("run_meta.json"), &meta)?;
    Ok(report)
}

/// Entry point of the `run` subcommand.
pub fn run_command(config_path: &Path) -> CliResult<PathBuf> {
    let config = Config::load(config_path)?;
    let out_dir = config.resolve_output_dir();
    run_into(&config, &out_dir)?;
    Ok(out_dir)
}
