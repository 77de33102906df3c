//! The `sweep` subcommand: run a configuration template over a parameter
//! grid and aggregate one summary row per run.
//!
//! The grid is the cartesian product of the `[sweep]` axes, each axis a
//! dotted key path into the template plus the values it takes (the last
//! axis varies fastest). Every grid point runs in its own `run-NNNN/`
//! directory under the output directory; failures are recorded in their
//! summary row and never abort the sweep. Runs execute in parallel when the
//! `parallel` feature is on, with deterministic output either way.

use std::path::{Path, PathBuf};

use vortex_core::batch;
use vortex_core::parallelogram::CollapseCurve;

use crate::config::{Config, Positions, SweepAxis, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, write_json};
use crate::run::{self, RunReport};

/// Gap |1 - 2δ| below which the exponent α is reported as undefined.
const DEGENERATE_DELTA_GAP: f64 = 1e-9;

struct RunPrep {
    index: usize,
    dir: PathBuf,
    axis_cells: Vec<String>,
    config: Result<Config, CliError>,
}

/// Replaces the value at a dotted key path; numeric segments index arrays.
/// The path must already exist in the document.
fn set_path(root: &mut toml::Value, path: &str, new: toml::Value) -> CliResult<()> {
    let mut current = root;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::usage(format!("bad sweep axis path {path:?}")));
    }
    for (pos, segment) in segments.iter().enumerate() {
        let next = match current {
            toml::Value::Table(table) => table.get_mut(*segment),
            toml::Value::Array(items) => {
                segment.parse::<usize>().ok().and_then(|k| items.get_mut(k))
            }
            _ => None,
        };
        let Some(next) = next else {
            return Err(CliError::usage(format!(
                "sweep axis path {path:?} does not exist in the template (missing {segment:?}); \
                 write the key explicitly in the template file"
            )));
        };
        if pos == segments.len() - 1 {
            *next = new;
            return Ok(());
        }
        current = next;
    }
    unreachable!("loop returns on the last segment");
}

fn fmt_toml_value(value: &toml::Value) -> String {
    match value {
        toml::Value::Float(f) => fmt_f64(*f),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::String(s) => s.clone(),
        toml::Value::Boolean(b) => b.to_string(),
        other => other.to_string(),
    }
}

fn termination_name(termination: vortex_core::dynamics::Termination) -> &'static str {
    use vortex_core::dynamics::Termination::*;
    match termination {
        TimeLimit => "time_limit",
        CollisionEvent => "collision_event",
        StepCollapse => "step_collapse",
        BlowUp => "blow_up",
    }
}

fn kind_name(kind: vortex_core::collisions::CollisionKind) -> &'static str {
    use vortex_core::collisions::CollisionKind::*;
    match kind {
        NCollision => "n_collision",
        Sequential => "sequential",
        Relative => "relative",
        RelativeSequential => "relative_sequential",
    }
}

fn collision_tags(report: &RunReport) -> String {
    let Some(classification) = &report.classification else {
        return String::new();
    };
    let Some(collisions) = &classification.report else {
        return String::new();
    };
    collisions
        .clusters
        .iter()
        .map(|c| {
            let members: Vec<String> = c.members.iter().map(|m| (m + 1).to_string()).collect();
            format!("{}({})", kind_name(c.kind), members.join("-"))
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// The (δ, α, limit-direction) cells, populated for parallelogram
/// scenarios: δ always, α away from the degenerate gap, and the collapse
/// limit direction when the curve applies (opposite signs, δ ≠ 1/2).
fn parallelogram_cells(config: &Config, report: &RunReport) -> [String; 5] {
    let Positions::Parallelogram { g1, g2, .. } = &config.scenario.positions else {
        return Default::default();
    };
    let delta = 2.0 * (g1 * g2).abs() / (g1 * g1 + g2 * g2);
    let gap = 1.0 - 2.0 * delta;
    let alpha =
        if gap.abs() > DEGENERATE_DELTA_GAP { fmt_f64(1.0 / gap) } else { String::new() };
    let h = report.initial_invariants.energy;
    let h_const = (-4.0 * std::f64::consts::PI * h / (g1 * g1 + g2 * g2)).exp();
    let limit = CollapseCurve::from_strengths(*g1, *g2, h_const)
        .map(|curve| curve.limit_direction())
        .ok();
    let cell = |k: usize| limit.map(|d| fmt_f64(d[k])).unwrap_or_default();
    [fmt_f64(delta), alpha, cell(0), cell(1), cell(2)]
}

fn summary_row(prep: &RunPrep, outcome: &Result<RunReport, CliError>) -> Vec<String> {
    let mut row = vec![prep.index.to_string(), prep.dir.display().to_string()];
    row.extend(prep.axis_cells.iter().cloned());
    match outcome {
        Ok(report) => {
            let drift = &report.invariant_drift;
            row.extend([
                "ok".to_string(),
                termination_name(report.termination).to_string(),
                fmt_f64(report.t_final),
                report.samples.to_string(),
                fmt_f64(drift.energy),
                fmt_f64(drift.angular_impulse),
                fmt_f64(drift.moment_abs),
                fmt_f64(drift.m),
                fmt_f64(report.min_pair_distance),
                collision_tags(report),
            ]);
            let config = prep.config.as_ref().expect("successful run had a config");
            row.extend(parallelogram_cells(config, report));
            let bound_ratio = report
                .beta12_bound
                .as_ref()
                .and_then(|a| a.report.as_ref())
                .and_then(|b| b.ratio)
                .map(fmt_f64)
                .unwrap_or_default();
            row.push(bound_ratio);
            row.push(String::new());
        }
        Err(err) => {
            row.push("error".to_string());
            row.extend(std::iter::repeat(String::new()).take(15));
            row.push(err.message().to_string());
        }
    }
    row
}

/// Entry point of the `sweep` subcommand. Returns the output directory and
/// the (ok, failed) counts; a sweep with failures is reported as partial.
pub fn sweep_command(config_path: &Path) -> CliResult<(PathBuf, usize, usize)> {
    let text = std::fs::read_to_string(config_path).map_err(|err| {
        CliError::usage(format!("cannot read config {}: {err}", config_path.display()))
    })?;
    let template = Config::parse(&text)?;
    let raw: toml::Value =
        toml::from_str(&text).map_err(|err| CliError::usage(format!("config parse error: {err}")))?;
    let axes: Vec<SweepAxis> = match &template.sweep {
        Some(section) if !section.axes.is_empty() => section.axes.clone(),
        _ => {
            return Err(CliError::usage(
                "sweep needs a [sweep] section with at least one [[sweep.axes]] entry",
            ))
        }
    };
    for axis in &axes {
        if axis.values.is_empty() {
            return Err(CliError::usage(format!(
                "sweep axis {:?} has an empty value list",
                axis.path
            )));
        }
    }
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let out_dir = template.resolve_output_dir();
    std::fs::create_dir_all(&out_dir)?;

    let mut preps = Vec::with_capacity(total);
    let mut odometer = vec![0usize; axes.len()];
    for index in 0..total {
        let mut point = raw.clone();
        let mut axis_cells = Vec::with_capacity(axes.len());
        for (axis, &pick) in axes.iter().zip(&odometer) {
            let value = axis.values[pick].clone();
            axis_cells.push(fmt_toml_value(&value));
            set_path(&mut point, &axis.path, value)?;
        }
        let config = point
            .try_into::<Config>()
            .map_err(|err| CliError::usage(format!("grid point {index}: {err}")))
            .and_then(|mut config: Config| {
                config.sweep = None;
                config.validate()?;
                Ok(config)
            });
        preps.push(RunPrep {
            index,
            dir: out_dir.join(format!("run-{index:04}")),
            axis_cells,
            config,
        });
        for (slot, axis) in odometer.iter_mut().zip(&axes).rev() {
            *slot += 1;
            if *slot < axis.values.len() {
                break;
            }
            *slot = 0;
        }
    }

    let outcomes = batch::map_collect(&preps, |prep| match &prep.config {
        Ok(config) => run::run_into(config, &prep.dir),
        Err(err) => Err(err.clone()),
    });

    let mut writer = csv::Writer::from_path(out_dir.join("summary.csv"))
        .map_err(|err| CliError::runtime(format!("summary.csv: {err}")))?;
    let mut header = vec!["run".to_string(), "dir".to_string()];
    header.extend(axes.iter().map(|a| a.path.clone()));
    header.extend(
        [
            "status",
            "termination",
            "t_final",
            "samples",
            "drift_energy",
            "drift_angular_impulse",
            "drift_moment",
            "drift_m",
            "min_pair_dist",
            "collision_tags",
            "delta",
            "alpha",
            "limit_x",
            "limit_y",
            "limit_z",
            "bound_ratio",
            "error",
        ]
        .map(String::from),
    );
    writer.write_record(&header)?;
    let mut failed = 0usize;
    for (prep, outcome) in preps.iter().zip(&outcomes) {
        if outcome.is_err() {
            failed += 1;
        }
        writer.write_record(summary_row(prep, outcome))?;
    }
    writer.flush()?;

    let meta = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": "sweep",
        "axes": axes,
        "runs": total,
        "ok": total - failed,
        "failed": failed,
    });
    write_json(&out_dir.join("sweep_meta.json"), &meta)?;

    if failed > 0 {
        return Err(CliError::Partial(format!(
            "{failed} of {total} runs failed; per-run errors are in {}",
            out_dir.join("summary.csv").display()
        )));
    }
    Ok((out_dir, total, failed))
}
