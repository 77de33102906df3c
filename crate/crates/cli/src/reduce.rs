//! The `reduce` subcommand: map an integrated four-vortex run through the
//! binary-pair reduction, verify the chart round trip, integrate the
//! averaged slow system, and compare the two on a common time grid.
//!
//! The binary is always the pair (1, 2). The chart round trip works for any
//! strengths with Γ1 + Γ2 ≠ 0; the averaged comparison additionally needs
//! the strength condition Γ1 + Γ2 = Γ3 = Γ4, and is skipped with a note
//! otherwise. Angles are compared modulo π because the averaged energy is
//! π-periodic in the slow angle.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;

use vortex_core::dynamics::Trajectory;
use vortex_core::ode::{SolverOptions, StopReason};
use vortex_core::reduction::{self, ReducedSystem};

use crate::config::{Config, IntegratorSection, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, write_json};
use crate::run;

/// Ceiling on the averaged integrator's step so the comparison grid can be
/// interpolated accurately.
const REDUCED_MAX_STEP: f64 = 0.01;

/// Floor on the slow-angle span used in the envelope denominator, so a
/// nearly stationary angle does not blow the fraction up.
const PHI_SPAN_FLOOR: f64 = 0.2;

/// Row cap of `reduced.csv`. The comparison itself uses every sample; the
/// file is an evenly strided digest of the two series.
const MAX_REDUCED_ROWS: usize = 4000;

/// Outcome of tracking the averaged flow against the full one.
#[derive(Debug, Clone, Serialize)]
pub struct AveragedComparison {
    /// Drift of the averaged energy along its own flow, relative to its
    /// initial value (unit floor).
    pub hbar_relative_drift: f64,
    pub samples_compared: usize,
    pub i1_range: f64,
    pub worst_i1_deviation: f64,
    /// worst_i1_deviation / i1_range.
    pub i1_fraction: f64,
    pub phi1_span: f64,
    pub worst_phi1_deviation: f64,
    /// worst_phi1_deviation / max(phi1_span, 0.2).
    pub phi1_fraction: f64,
    /// Configured envelope both fractions are compared against.
    pub envelope: f64,
    pub within_envelope: bool,
    /// Why the averaged integration stopped.
    pub stop_reason: String,
}

/// The content of `reduction.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionComparison {
    pub schema_version: u32,
    /// Pair separation at the first sample.
    pub epsilon_initial: f64,
    /// Time interval covered by the comparison.
    pub window: [f64; 2],
    /// Largest position error of the reduced-chart round trip over all
    /// samples.
    pub round_trip_max_error: f64,
    /// Whether Γ1 + Γ2 = Γ3 = Γ4 holds, enabling the averaged comparison.
    pub condition_satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub averaged: Option<AveragedComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// One comparison row of `reduced.csv`.
#[derive(Debug, Clone)]
pub struct ReducedRow {
    pub t: f64,
    pub i1_full: f64,
    pub phi1_full: f64,
    pub i1_avg: Option<f64>,
    pub phi1_avg: Option<f64>,
}

/// Distance between two angles modulo π.
fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn stop_reason_name(reason: &StopReason) -> String {
    match reason {
        StopReason::Completed => "completed".to_string(),
        StopReason::Event { index: 0 } => "domain_edge".to_string(),
        StopReason::Event { index: 1 } => "log_floor".to_string(),
        StopReason::Event { index } => format!("event_{index}"),
        StopReason::StepCollapse => "step_collapse".to_string(),
    }
}

/// Compares an integrated trajectory against its reduction. Returns the
/// report and the per-sample comparison rows.
pub fn compare_detailed(
    traj: &Trajectory,
    envelope: f64,
    integ: &IntegratorSection,
) -> CliResult<(ReductionComparison, Vec<ReducedRow>)> {
    let strengths = traj.strengths();
    if strengths.len() != 4 {
        return Err(CliError::usage(format!(
            "the reduction needs a four-vortex run, got {}",
            strengths.len()
        )));
    }
    let arr: [f64; 4] = strengths.try_into().expect("length checked");

    let mut full = Vec::with_capacity(traj.len());
    let mut round_trip_max = 0.0f64;
    for sample in &traj.samples {
        let coords = reduction::to_reduced(&sample.state).map_err(|err| {
            CliError::runtime(format!("reduced chart failed at t = {}: {err}", sample.time))
        })?;
        let back = reduction::from_reduced(&coords, &arr).map_err(|err| {
            CliError::runtime(format!("chart inversion failed at t = {}: {err}", sample.time))
        })?;
        for (a, b) in back.positions.iter().zip(&sample.state.positions) {
            round_trip_max = round_trip_max.max((a - b).norm());
        }
        full.push((sample.time, coords));
    }
    let coords0 = &full[0].1;
    let epsilon_initial = coords0.epsilon();
    let window = [full[0].0, full[full.len() - 1].0];

    if !reduction::strengths_condition(&arr) {
        let comparison = ReductionComparison {
            schema_version: SCHEMA_VERSION,
            epsilon_initial,
            window,
            round_trip_max_error: round_trip_max,
            condition_satisfied: false,
            averaged: None,
            note: Some(
                "averaged comparison skipped: the strengths do not satisfy \
                 Γ1 + Γ2 = Γ3 = Γ4"
                    .to_string(),
            ),
        };
        let rows = full
            .iter()
            .map(|(t, c)| ReducedRow {
                t: *t,
                i1_full: c.i[2],
                phi1_full: c.phi[2],
                i1_avg: None,
                phi1_avg: None,
            })
            .collect();
        return Ok((comparison, rows));
    }

    let system = ReducedSystem::from_coords(coords0, &arr)?;
    let opts = SolverOptions {
        rel_tol: integ.rel_tol,
        abs_tol: integ.abs_tol,
        max_step: integ.max_step.min(REDUCED_MAX_STEP),
        min_step: integ.min_step,
        initial_step: None,
    };
    let reduced = reduction::integrate_reduced(
        &system,
        coords0.i[2],
        coords0.phi[2],
        window[1] - window[0],
        &opts,
    )?;

    let mut rows = Vec::with_capacity(full.len());
    let mut i1_min = f64::INFINITY;
    let mut i1_max = f64::NEG_INFINITY;
    let mut phi_min = f64::INFINITY;
    let mut phi_max = f64::NEG_INFINITY;
    let mut worst_i1 = 0.0f64;
    let mut worst_phi = 0.0f64;
    let mut compared = 0usize;
    for (t, coords) in &full {
        let (i1_full, phi1_full) = (coords.i[2], coords.phi[2]);
        i1_min = i1_min.min(i1_full);
        i1_max = i1_max.max(i1_full);
        phi_min = phi_min.min(phi1_full);
        phi_max = phi_max.max(phi1_full);
        let avg = reduced.sample_at(t - window[0]);
        if let Some((i1_avg, phi1_avg)) = avg {
            worst_i1 = worst_i1.max((i1_avg - i1_full).abs());
            worst_phi = worst_phi.max(angle_gap(phi1_avg, phi1_full));
            compared += 1;
        }
        rows.push(ReducedRow {
            t: *t,
            i1_full,
            phi1_full,
            i1_avg: avg.map(|(v, _)| v),
            phi1_avg: avg.map(|(_, v)| v),
        });
    }

    let i1_range = i1_max - i1_min;
    let phi1_span = phi_max - phi_min;
    let i1_fraction = if i1_range > 0.0 { worst_i1 / i1_range } else { 0.0 };
    let phi1_fraction = worst_phi / phi1_span.max(PHI_SPAN_FLOOR);
    let hbar0 = system.hbar(coords0.i[2], coords0.phi[2])?;
    let averaged = AveragedComparison {
        hbar_relative_drift: reduced.hbar_drift()? / hbar0.abs().max(1.0),
        samples_compared: compared,
        i1_range,
        worst_i1_deviation: worst_i1,
        i1_fraction,
        phi1_span,
        worst_phi1_deviation: worst_phi,
        phi1_fraction,
        envelope,
        within_envelope: compared > 0 && i1_fraction <= envelope && phi1_fraction <= envelope,
        stop_reason: stop_reason_name(&reduced.reason),
    };
    let comparison = ReductionComparison {
        schema_version: SCHEMA_VERSION,
        epsilon_initial,
        window,
        round_trip_max_error: round_trip_max,
        condition_satisfied: true,
        averaged: Some(averaged),
        note: None,
    };
    Ok((comparison, rows))
}

/// The report alone, for embedding into `report.json`.
pub fn compare(
    traj: &Trajectory,
    envelope: f64,
    integ: &IntegratorSection,
) -> CliResult<ReductionComparison> {
    compare_detailed(traj, envelope, integ).map(|(report, _)| report)
}

fn write_reduced_csv(path: &Path, rows: &[ReducedRow]) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "t,i1_full,phi1_full,i1_avg,phi1_avg")?;
    let stride = rows.len().div_ceil(MAX_REDUCED_ROWS).max(1);
    let keep = |k: usize| k % stride == 0 || k == rows.len() - 1;
    for row in rows.iter().enumerate().filter(|(k, _)| keep(*k)).map(|(_, r)| r) {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(row.t),
            fmt_f64(row.i1_full),
            fmt_f64(row.phi1_full),
            opt(row.i1_avg),
            opt(row.phi1_avg)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Entry point of the `reduce` subcommand.
pub fn reduce_command(config_path: &Path) -> CliResult<PathBuf> {
    let config = Config::load(config_path)?;
    if config.strengths()?.len() != 4 {
        return Err(CliError::usage("the reduce subcommand needs a four-vortex scenario"));
    }
    let out_dir = config.resolve_output_dir();
    let (traj, _) = run::execute(&config)?;
    let (comparison, rows) = compare_detailed(&traj, config.analysis.envelope, &config.integrator)?;
    std::fs::create_dir_all(&out_dir)?;
    write_reduced_csv(&out_dir.join("reduced.csv"), &rows)?;
    write_json(&out_dir.join("reduction.json"), &comparison)?;
    Ok(out_dir)
}
