//! Scenario configuration: the TOML schema, its validation rules, and the
//! realization of a configured scenario as an initial vortex state.
//!
//! A configuration file looks like
//!
//! ```toml
//! schema_version = 1
//!
//! [scenario]
//! strengths = [1.0, 1.0, 1.0, 1.0]
//!
//! [scenario.positions]
//! kind = "square"          # explicit | square | parallelogram | random | binary
//! side = 1.0
//!
//! [integrator]
//! t_end = 20.0
//!
//! [analysis]
//! classify = true
//!
//! [output]
//! dir = "out"
//! ```
//!
//! The full grammar, defaults, and documented parameter ranges live in
//! `docs/config.md`. The only environment variable the tool reads is
//! `VORTEX_LAB_OUTPUT_DIR`, which overrides `[output] dir`.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use vortex_core::dynamics::IntegratorConfig;
use vortex_core::parallelogram;
use vortex_core::VortexState;

use crate::error::{CliError, CliResult};

/// Version stamped into every configuration file and emitted document.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "VORTEX_LAB_OUTPUT_DIR";

/// Largest vortex count the laboratory covers.
pub const MAX_VORTICES: usize = 4;

/// Half-width of the square from which random positions are drawn.
const RANDOM_BOX: f64 = 1.5;
/// Smallest pairwise distance accepted in a raw random draw.
const RANDOM_MIN_SEPARATION: f64 = 0.2;
/// Attempts before giving up on a random draw (sign of M not reachable).
const RANDOM_MAX_TRIES: usize = 10_000;
/// Largest accepted binary separation; beyond this the pair is not fast.
const BINARY_MAX_EPSILON: f64 = 0.1;

/// A fully parsed configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub scenario: Scenario,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Strengths plus a way to produce initial positions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Required for every position kind except `parallelogram`, which
    /// derives its strengths from `g1` and `g2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strengths: Option<Vec<f64>>,
    pub positions: Positions,
}

/// Initial-position generators.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Positions {
    /// Positions given literally as `[[x, y], ...]`.
    Explicit { values: Vec<[f64; 2]> },
    /// The four corners of an axis-aligned square with corner at the origin.
    Square {
        #[serde(default = "default_side")]
        side: f64,
    },
    /// The symmetric configuration (P, Q, -Q, -P) with P = 1 on the real
    /// axis, Q = i·aspect, and strengths (g1, g2, g2, g1).
    Parallelogram { g1: f64, g2: f64, aspect: f64 },
    /// Positions drawn uniformly from a box with a minimum-separation
    /// rejection rule; `m_target` rescales the draw to a prescribed M.
    Random {
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m_target: Option<f64>,
    },
    /// A close pair around `center` with separation `epsilon` at `angle`,
    /// split according to the strength ratio, plus two explicit spectators.
    Binary {
        epsilon: f64,
        #[serde(default)]
        angle: f64,
        #[serde(default)]
        center: [f64; 2],
        spectators: [[f64; 2]; 2],
    },
}

fn default_side() -> f64 {
    1.0
}

impl Positions {
    /// Short generator name for reports.
    pub fn generator_name(&self) -> &'static str {
        match self {
            Positions::Explicit { .. } => "explicit",
            Positions::Square { .. } => "square",
            Positions::Parallelogram { .. } => "parallelogram",
            Positions::Random { .. } => "random",
            Positions::Binary { .. } => "binary",
        }
    }
}

/// Time horizon and integrator tolerances.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub collision_radius: f64,
    pub blow_up_radius: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let cfg = IntegratorConfig::default();
        IntegratorSection {
            t_end: 20.0,
            rel_tol: cfg.rel_tol,
            abs_tol: cfg.abs_tol,
            max_step: cfg.max_step,
            min_step: cfg.min_step,
            collision_radius: cfg.collision_radius,
            blow_up_radius: cfg.blow_up_radius,
        }
    }
}

impl IntegratorSection {
    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            min_step: self.min_step,
            collision_radius: self.collision_radius,
            blow_up_radius: self.blow_up_radius,
        }
    }

    fn validate(&self) -> CliResult<()> {
        let positives = [
            ("t_end", self.t_end),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("min_step", self.min_step),
            ("collision_radius", self.collision_radius),
            ("blow_up_radius", self.blow_up_radius),
        ];
        for (name, value) in positives {
            if !(value > 0.0) || !value.is_finite() {
                return Err(CliError::usage(format!(
                    "[integrator] {name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.blow_up_radius <= self.collision_radius {
            return Err(CliError::usage(
                "[integrator] blow_up_radius must exceed collision_radius",
            ));
        }
        Ok(())
    }
}

/// Which post-run analyses to attach to the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Tag collapsing clusters along the trajectory.
    pub classify: bool,
    /// "Reached zero" threshold of the classifier.
    pub classify_eps: f64,
    /// Evaluate the dipole shape bound for `bound_pair`.
    pub beta12_bound: bool,
    pub bound_pair: [usize; 2],
    /// Check preservation of the symmetric-configuration equalities.
    pub parallelogram: bool,
    /// Compare the averaged slow flow against the integrated run
    /// (four vortices, pair (1, 2) as the binary).
    pub reduction: bool,
    /// Tracking envelope of the reduction comparison, as a fraction of the
    /// observed slow-variable range.
    pub envelope: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            classify: true,
            classify_eps: 1e-3,
            beta12_bound: false,
            bound_pair: [0, 1],
            parallelogram: false,
            reduction: false,
            envelope: 0.05,
        }
    }
}

impl AnalysisSection {
    fn validate(&self, n: usize) -> CliResult<()> {
        if !(self.classify_eps > 0.0) || !self.classify_eps.is_finite() {
            return Err(CliError::usage(format!(
                "[analysis] classify_eps must be positive, got {}",
                self.classify_eps
            )));
        }
        if !(self.envelope > 0.0 && self.envelope <= 1.0) {
            return Err(CliError::usage(format!(
                "[analysis] envelope must lie in (0, 1], got {}",
                self.envelope
            )));
        }
        let [i, j] = self.bound_pair;
        if self.beta12_bound && (i == j || i >= n || j >= n) {
            return Err(CliError::usage(format!(
                "[analysis] bound_pair ({i}, {j}) is not a pair of distinct indices below {n}"
            )));
        }
        if self.parallelogram && n != 4 {
            return Err(CliError::usage(
                "[analysis] parallelogram checks need a four-vortex scenario",
            ));
        }
        if self.reduction && n != 4 {
            return Err(CliError::usage(
                "[analysis] the reduction comparison needs a four-vortex scenario",
            ));
        }
        Ok(())
    }
}

/// Where output files go.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

/// Grid specification for the `sweep` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<SweepAxis>,
}

/// One grid axis: a dotted key path into the configuration file and the
/// values it takes. The grid is the cartesian product of all axes, with the
/// last axis varying fastest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<toml::Value>,
}

impl Config {
    /// Parses and validates a configuration file.
    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path).map_err(|err| {
            CliError::usage(format!("cannot read config {}: {err}", path.display()))
        })?;
        Config::parse(&text)
    }

    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> CliResult<Config> {
        let config: Config = toml::from_str(text)
            .map_err(|err| CliError::usage(format!("config parse error: {err}")))?;
        config.validate()?;
        Ok(config)
    }

    /// The strength vector of the scenario, deriving it for the
    /// parallelogram generator.
    pub fn strengths(&self) -> CliResult<Vec<f64>> {
        match (&self.scenario.positions, &self.scenario.strengths) {
            (Positions::Parallelogram { g1, g2, .. }, None) => {
                Ok(parallelogram::pattern_strengths(*g1, *g2).to_vec())
            }
            (Positions::Parallelogram { .. }, Some(_)) => Err(CliError::usage(
                "a parallelogram scenario derives its strengths from g1 and g2; \
                 drop [scenario] strengths",
            )),
            (_, Some(s)) => Ok(s.clone()),
            (_, None) => Err(CliError::usage("[scenario] strengths is required")),
        }
    }

    /// Structural validation: field ranges and cross-field consistency.
    /// Everything here is a usage error.
    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::usage(format!(
                "schema_version {} is not supported; this build writes and reads version {}",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        let strengths = self.strengths()?;
        let n = strengths.len();
        if !(2..=MAX_VORTICES).contains(&n) {
            return Err(CliError::usage(format!(
                "the laboratory covers 2 to {MAX_VORTICES} vortices, got {n} strengths"
            )));
        }
        for (index, g) in strengths.iter().enumerate() {
            if *g == 0.0 || !g.is_finite() {
                return Err(CliError::usage(format!(
                    "strength {} must be nonzero and finite, got {g}",
                    index + 1
                )));
            }
        }
        self.validate_positions(&strengths)?;
        self.integrator.validate()?;
        self.analysis.validate(n)?;
        if self.output.dir.as_os_str().is_empty() {
            return Err(CliError::usage("[output] dir must not be empty"));
        }
        Ok(())
    }

    fn validate_positions(&self, strengths: &[f64]) -> CliResult<()> {
        let n = strengths.len();
        match &self.scenario.positions {
            Positions::Explicit { values } => {
                if values.len() != n {
                    return Err(CliError::usage(format!(
                        "{} positions but {} strengths",
                        values.len(),
                        n
                    )));
                }
                for (index, [x, y]) in values.iter().enumerate() {
                    if !x.is_finite() || !y.is_finite() {
                        return Err(CliError::usage(format!(
                            "position {} must be finite, got ({x}, {y})",
                            index + 1
                        )));
                    }
                }
            }
            Positions::Square { side } => {
                if !(side > &0.0) || !side.is_finite() {
                    return Err(CliError::usage(format!(
                        "square side must be positive and finite, got {side}"
                    )));
                }
                if n != 4 {
                    return Err(CliError::usage(format!(
                        "a square scenario needs 4 strengths, got {n}"
                    )));
                }
            }
            Positions::Parallelogram { g1, g2, aspect } => {
                if *g1 == 0.0 || *g2 == 0.0 || !g1.is_finite() || !g2.is_finite() {
                    return Err(CliError::usage(format!(
                        "parallelogram strengths must be nonzero and finite, got ({g1}, {g2})"
                    )));
                }
                if !(aspect > &0.0) || !aspect.is_finite() {
                    return Err(CliError::usage(format!(
                        "parallelogram aspect must be positive and finite, got {aspect}"
                    )));
                }
            }
            Positions::Random { m_target, .. } => {
                if let Some(m) = m_target {
                    if !m.is_finite() || *m == 0.0 {
                        return Err(CliError::usage(format!(
                            "m_target must be finite and nonzero (M = 0 is not reachable \
                             by similarity rescaling), got {m}"
                        )));
                    }
                    let all_positive = strengths.iter().all(|g| *g > 0.0);
                    let all_negative = strengths.iter().all(|g| *g < 0.0);
                    if (all_positive || all_negative) && *m < 0.0 {
                        return Err(CliError::usage(
                            "m_target < 0 is unreachable when all strengths share one sign \
                             (M is then a positive combination of squared distances)",
                        ));
                    }
                }
            }
            Positions::Binary { epsilon, angle, center, spectators } => {
                if n != 4 {
                    return Err(CliError::usage(format!(
                        "a binary scenario needs 4 strengths, got {n}"
                    )));
                }
                if !(epsilon > &0.0) || *epsilon > BINARY_MAX_EPSILON {
                    return Err(CliError::usage(format!(
                        "binary epsilon must lie in (0, {BINARY_MAX_EPSILON}], got {epsilon}"
                    )));
                }
                if strengths[0] + strengths[1] == 0.0 {
                    return Err(CliError::usage(
                        "a binary scenario needs Γ1 + Γ2 ≠ 0 to place the pair around \
                         its center of vorticity",
                    ));
                }
                let mut coords = vec![*angle, center[0], center[1]];
                coords.extend(spectators.iter().flatten());
                if coords.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::usage("binary parameters must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Builds the initial state the scenario describes.
    pub fn initial_state(&self) -> CliResult<VortexState> {
        let strengths = self.strengths()?;
        let positions = match &self.scenario.positions {
            Positions::Explicit { values } => {
                values.iter().map(|[x, y]| Complex64::new(*x, *y)).collect()
            }
            Positions::Square { side } => vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(*side, 0.0),
                Complex64::new(*side, *side),
                Complex64::new(0.0, *side),
            ],
            Positions::Parallelogram { g1, g2, aspect } => {
                return parallelogram::build_state(
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, *aspect),
                    *g1,
                    *g2,
                )
                .map_err(|err| CliError::usage(format!("parallelogram scenario: {err}")));
            }
            Positions::Random { seed, m_target } => {
                return self.random_positions(&strengths, *seed, *m_target);
            }
            Positions::Binary { epsilon, angle, center, spectators } => {
                let total = strengths[0] + strengths[1];
                let q = Complex64::from_polar(*epsilon, *angle);
                let c = Complex64::new(center[0], center[1]);
                vec![
                    c - q * (strengths[1] / total),
                    c + q * (strengths[0] / total),
                    Complex64::new(spectators[0][0], spectators[0][1]),
                    Complex64::new(spectators[1][0], spectators[1][1]),
                ]
            }
        };
        VortexState::new(positions, strengths)
            .map_err(|err| CliError::usage(format!("invalid scenario: {err}")))
    }

    fn random_positions(
        &self,
        strengths: &[f64],
        seed: u64,
        m_target: Option<f64>,
    ) -> CliResult<VortexState> {
        let n = strengths.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..RANDOM_MAX_TRIES {
            let positions: Vec<Complex64> = (0..n)
                .map(|_| {
                    Complex64::new(
                        rng.gen_range(-RANDOM_BOX..RANDOM_BOX),
                        rng.gen_range(-RANDOM_BOX..RANDOM_BOX),
                    )
                })
                .collect();
            let min_sep = vortex_core::state::pairs(n)
                .map(|(i, j)| (positions[i] - positions[j]).norm())
                .fold(f64::INFINITY, f64::min);
            if min_sep < RANDOM_MIN_SEPARATION {
                continue;
            }
            let state = VortexState::new(positions, strengths.to_vec())
                .map_err(|err| CliError::usage(format!("invalid scenario: {err}")))?;
            let Some(target) = m_target else {
                return Ok(state);
            };
            let m = state.invariants()?.m_pair_sum;
            if m == 0.0 || m.signum() != target.signum() {
                continue;
            }
            let scale = (target / m).sqrt();
            let scaled = VortexState::new(
                state.positions.iter().map(|z| z * scale).collect(),
                strengths.to_vec(),
            )
            .map_err(|err| CliError::usage(format!("invalid scenario: {err}")))?;
            if scaled.min_pair_distance() <= self.integrator.collision_radius {
                return Err(CliError::runtime(format!(
                    "m_target = {target} demands scale {scale:.3e}, which puts the \
                     configuration inside the collision radius"
                )));
            }
            return Ok(scaled);
        }
        Err(CliError::runtime(format!(
            "no random draw reached the sign of m_target within {RANDOM_MAX_TRIES} tries; \
             the strengths may not admit that sign of M"
        )))
    }

    /// The output directory, honoring the `VORTEX_LAB_OUTPUT_DIR` override.
    pub fn resolve_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }
}
