//! Emission of analysis-ready files.
//!
//! CSV numbers use full round-trip formatting (17 significant digits) so
//! downstream checks can diff outputs numerically; JSON documents are
//! pretty-printed with a stable field order. Nothing here depends on wall
//! time, so identical inputs produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use vortex_core::dynamics::Trajectory;
use vortex_core::sqdist;
use vortex_core::state::pairs;

use crate::error::{CliError, CliResult};

/// Full round-trip decimal form of one value.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes `trajectory.csv`: per-sample time, positions, conserved
/// quantities, and the smallest pairwise distance.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> CliResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let n = traj.first().state.n();
    let mut header = vec!["t".to_string()];
    for k in 1..=n {
        header.push(format!("x{k}"));
        header.push(format!("y{k}"));
    }
    header.extend(["H", "I", "Z_abs", "M", "min_pair_dist"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for (sample, min_dist) in traj.samples.iter().zip(&traj.min_pair_distance) {
        let mut row = vec![fmt_f64(sample.time)];
        for z in &sample.state.positions {
            row.push(fmt_f64(z.re));
            row.push(fmt_f64(z.im));
        }
        let inv = &sample.invariants;
        row.push(fmt_f64(inv.energy));
        row.push(fmt_f64(inv.angular_impulse));
        row.push(fmt_f64(inv.moment.norm()));
        row.push(fmt_f64(inv.m_pair_sum));
        row.push(fmt_f64(*min_dist));
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `shape.csv`: per-sample scale ρ and normalized shape β in
/// lexicographic pair order.
pub fn write_shape_csv(path: &Path, traj: &Trajectory) -> CliResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let n = traj.first().state.n();
    let mut header = vec!["t".to_string(), "rho".to_string()];
    for (i, j) in pairs(n) {
        header.push(format!("beta_{}{}", i + 1, j + 1));
    }
    writeln!(out, "{}", header.join(","))?;
    for sample in &traj.samples {
        let shape = sqdist::to_shape(&sample.state)
            .map_err(|err| CliError::runtime(format!("shape at t = {}: {err}", sample.time)))?;
        let mut row = vec![fmt_f64(sample.time), fmt_f64(shape.rho)];
        row.extend(shape.beta.iter().map(|b| fmt_f64(*b)));
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a pretty-printed JSON document with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_keeps_seventeen_significant_digits() {
        let text = fmt_f64(std::f64::consts::PI);
        assert_eq!(text, "3.1415926535897931e0");
        for value in [std::f64::consts::PI, -1.5e-12, 8.0 * std::f64::consts::PI.powi(2), 1e300] {
            assert_eq!(fmt_f64(value).parse::<f64>().unwrap(), value);
        }
    }
}
