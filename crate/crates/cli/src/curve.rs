//! The `parallelogram-curve` subcommand: sample the bounded-collapse
//! constraint curve (x(p), y(p), z(p)) of the symmetric configuration class
//! and emit the samples with their defining-relation residuals.

use std::io::Write;
use std::path::PathBuf;

use vortex_core::parallelogram::{constraint_residuals, CollapseCurve};

use crate::error::{CliError, CliResult};
use crate::output::fmt_f64;

/// Default p-range when β = 1 makes the whole positive axis realizable.
const DEFAULT_UNIT_RANGE: (f64, f64) = (1e-3, 1e3);

pub struct CurveArgs {
    pub g1: f64,
    pub g2: f64,
    /// Energy constant of the constraint (already normalized by the
    /// strength scale; 1.0 fixes the gauge).
    pub energy_h: f64,
    pub points: usize,
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    /// Output file; stdout when absent.
    pub out: Option<PathBuf>,
}

/// Entry point of the `parallelogram-curve` subcommand.
pub fn curve_command(args: &CurveArgs) -> CliResult<Option<String>> {
    if args.points < 2 {
        return Err(CliError::usage(format!("--points must be at least 2, got {}", args.points)));
    }
    let curve = CollapseCurve::from_strengths(args.g1, args.g2, args.energy_h)
        .map_err(|err| CliError::usage(err.to_string()))?;
    let (real_lo, real_hi) = curve.params.realizable_range();
    let (default_lo, default_hi) = if real_lo == 0.0 { DEFAULT_UNIT_RANGE } else { (real_lo, real_hi) };
    let lo = args.p_min.unwrap_or(default_lo);
    let hi = args.p_max.unwrap_or(default_hi);
    if !(lo > 0.0 && hi > lo) {
        return Err(CliError::usage(format!(
            "need 0 < p_min < p_max, got [{lo}, {hi}]"
        )));
    }
    if lo < real_lo || hi > real_hi {
        return Err(CliError::usage(format!(
            "[{lo}, {hi}] leaves the realizable parameter range [{real_lo}, {real_hi}] \
             of β = {}",
            curve.params.beta
        )));
    }

    let mut lines = vec!["p,x,y,z,energy_residual,law_residual".to_string()];
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    for k in 0..args.points {
        let frac = k as f64 / (args.points - 1) as f64;
        let p = (ln_lo + frac * (ln_hi - ln_lo)).exp();
        let point = curve.point(p).map_err(|err| CliError::runtime(err.to_string()))?;
        let residuals = constraint_residuals(&curve.params, point.x, point.y, point.z);
        lines.push(
            [point.p, point.x, point.y, point.z, residuals[0], residuals[1]]
                .map(fmt_f64)
                .join(","),
        );
    }
    let mut text = lines.join("\n");
    text.push('\n');

    match &args.out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(Some(format!("parallelogram-curve: wrote {} samples to {}", args.points, path.display())))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(None)
        }
    }
}
