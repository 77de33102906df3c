//! Cartesian equations of motion and adaptive trajectory integration.
//!
//! Each vortex moves in the velocity field induced by all the others:
//!
//! ```text
//! dz_α/dt = (i/2π) Σ_{β≠α} Γ_β (z_α − z_β) / |z_α − z_β|²
//! ```
//!
//! [`integrate`] drives the Dormand-Prince solver over this field, records
//! every accepted step together with its conserved quantities, and stops
//! early when the smallest pairwise distance crosses the collision radius,
//! when any vortex leaves the blow-up radius, or when the step size
//! collapses. Event times are localized by bisection on the dense output, so
//! the final sample of an event-terminated trajectory sits on the crossing
//! to within the solver's event tolerance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::VortexError;
use crate::ode::{self, OdeSystem, SolverOptions, StopReason};
use crate::state::{pairs, InvariantSet, VortexState};
use crate::Result;

/// Velocities `ż_α` induced at every vortex of `state`.
pub fn velocity_field(state: &VortexState) -> Result<Vec<Complex64>> {
    let n = state.n();
    let mut velocities = vec![Complex64::new(0.0, 0.0); n];
    for (i, j) in pairs(n) {
        let diff = state.positions[i] - state.positions[j];
        let b = diff.norm_sqr();
        if b == 0.0 {
            return Err(VortexError::SingularConfiguration { i, j, separation: 0.0 });
        }
        let kernel = diff / b;
        velocities[i] += state.strengths[j] * kernel;
        velocities[j] -= state.strengths[i] * kernel;
    }
    let rotate = Complex64::new(0.0, 1.0 / (2.0 * std::f64::consts::PI));
    for v in &mut velocities {
        *v *= rotate;
    }
    Ok(velocities)
}

/// Translates a state so its moment of vorticity Z vanishes.
///
/// Requires Γ = Σ Γ_α ≠ 0; for Γ = 0 the moment is translation-invariant and
/// no recentering exists. M is unchanged by the shift.
pub fn recenter(state: &VortexState) -> Result<VortexState> {
    state.validate()?;
    let gamma = state.total_strength();
    if gamma == 0.0 {
        return Err(VortexError::ZeroTotalStrength {
            context: "recentering needs Σ Γ_α ≠ 0".into(),
        });
    }
    let mut moment = Complex64::new(0.0, 0.0);
    for (z, g) in state.positions.iter().zip(&state.strengths) {
        moment += g * z;
    }
    let shift = moment / gamma;
    Ok(VortexState {
        positions: state.positions.iter().map(|z| z - shift).collect(),
        strengths: state.strengths.clone(),
        time: state.time,
    })
}

/// Tolerances, step bounds, and event radii for trajectory integration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Relative tolerance of the embedded error estimate.
    pub rel_tol: f64,
    /// Absolute tolerance of the embedded error estimate.
    pub abs_tol: f64,
    /// Largest allowed time step (also bounds the sample spacing).
    pub max_step: f64,
    /// Smallest allowed time step before the run reports step collapse.
    pub min_step: f64,
    /// Stop when the smallest pairwise distance falls below this radius.
    pub collision_radius: f64,
    /// Stop when any vortex moves farther than this from the origin.
    pub blow_up_radius: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.5,
            min_step: 1e-12,
            collision_radius: 1e-6,
            blow_up_radius: 1e6,
        }
    }
}

impl IntegratorConfig {
    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            min_step: self.min_step,
            initial_step: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.collision_radius > 0.0 && self.blow_up_radius > self.collision_radius) {
            return Err(VortexError::InvalidConfig(
                "need 0 < collision_radius < blow_up_radius".into(),
            ));
        }
        self.solver_options().validate()
    }
}

/// Why a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Reached the requested end time.
    TimeLimit,
    /// Smallest pairwise distance crossed the collision radius.
    CollisionEvent,
    /// Required step fell below the minimum: the integrator gave up without
    /// certifying a collision.
    StepCollapse,
    /// A vortex crossed the blow-up radius.
    BlowUp,
}

/// One accepted sample: time, full state, and its conserved quantities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub time: f64,
    pub state: VortexState,
    pub invariants: InvariantSet,
}

/// A time-ordered record of an integration run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    /// Accepted samples in strictly increasing time order.
    pub samples: Vec<TrajectorySample>,
    /// Why the run stopped.
    pub termination: Termination,
    /// Smallest pairwise distance at each sample.
    pub min_pair_distance: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from explicit states (synthetic data, re-analysis
    /// of stored runs). States must share one strengths vector and carry
    /// strictly increasing times.
    pub fn from_states(states: Vec<VortexState>, termination: Termination) -> Result<Self> {
        if states.is_empty() {
            return Err(VortexError::TrajectoryTooShort { len: 0, need: 1 });
        }
        let strengths = states[0].strengths.clone();
        let mut samples = Vec::with_capacity(states.len());
        let mut min_pair_distance = Vec::with_capacity(states.len());
        let mut last_time = f64::NEG_INFINITY;
        for state in states {
            if state.strengths != strengths {
                return Err(VortexError::InvalidState(
                    "samples disagree on the strengths vector".into(),
                ));
            }
            if state.time <= last_time {
                return Err(VortexError::InvalidState(
                    "sample times must be strictly increasing".into(),
                ));
            }
            last_time = state.time;
            let invariants = state.invariants()?;
            min_pair_distance.push(state.min_pair_distance());
            samples.push(TrajectorySample { time: state.time, state, invariants });
        }
        Ok(Trajectory { samples, termination, min_pair_distance })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when the trajectory holds no samples.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The shared strengths vector.
    pub fn strengths(&self) -> &[f64] {
        &self.samples[0].state.strengths
    }

    /// Sample times.
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    /// First sample.
    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    /// Last sample.
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory is never empty")
    }

    /// Largest relative drift of H, I, |Z|, and M over the run, measured
    /// against the initial sample with a unit floor on each denominator.
    pub fn max_invariant_drift(&self) -> f64 {
        let first = &self.samples[0].invariants;
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            let inv = &s.invariants;
            let drifts = [
                (inv.energy - first.energy).abs() / first.energy.abs().max(1.0),
                (inv.angular_impulse - first.angular_impulse).abs()
                    / first.angular_impulse.abs().max(1.0),
                (inv.moment.norm() - first.moment.norm()).abs() / first.moment.norm().max(1.0),
                (inv.m_pair_sum - first.m_pair_sum).abs() / first.m_pair_sum.abs().max(1.0),
            ];
            for d in drifts {
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// The Cartesian vortex system as a flat ODE over `(x_1, y_1, …, x_N, y_N)`.
///
/// Public so that tests and tools can drive the raw solver directly, for
/// example for backward-in-time runs.
pub struct CartesianSystem {
    strengths: Vec<f64>,
}

impl CartesianSystem {
    pub fn new(strengths: Vec<f64>) -> Self {
        CartesianSystem { strengths }
    }
}

impl OdeSystem for CartesianSystem {
    fn dim(&self) -> usize {
        2 * self.strengths.len()
    }

    fn eval(&self, _t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        let n = self.strengths.len();
        dydt.fill(0.0);
        for (i, j) in pairs(n) {
            let dx = y[2 * i] - y[2 * j];
            let dy = y[2 * i + 1] - y[2 * j + 1];
            let b = dx * dx + dy * dy;
            if b == 0.0 {
                return Err(VortexError::SingularConfiguration { i, j, separation: 0.0 });
            }
            let kx = dx / b;
            let ky = dy / b;
            dydt[2 * i] += self.strengths[j] * kx;
            dydt[2 * i + 1] += self.strengths[j] * ky;
            dydt[2 * j] -= self.strengths[i] * kx;
            dydt[2 * j + 1] -= self.strengths[i] * ky;
        }
        let inv_two_pi = 1.0 / (2.0 * std::f64::consts::PI);
        for i in 0..n {
            let (vx, vy) = (dydt[2 * i], dydt[2 * i + 1]);
            dydt[2 * i] = -vy * inv_two_pi;
            dydt[2 * i + 1] = vx * inv_two_pi;
        }
        Ok(())
    }
}

/// Packs positions into the flat layout used by [`CartesianSystem`].
pub fn flatten_positions(positions: &[Complex64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * positions.len());
    for z in positions {
        y.push(z.re);
        y.push(z.im);
    }
    y
}

/// Unpacks the flat layout back into plane points.
pub fn positions_from_flat(y: &[f64]) -> Vec<Complex64> {
    y.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

/// Integrates `state` forward to `t_end` with event detection.
///
/// Every accepted step is recorded with its invariants; see [`Trajectory`].
pub fn integrate(state: &VortexState, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    state.validate()?;
    cfg.validate()?;
    if t_end <= state.time {
        return Err(VortexError::InvalidConfig(format!(
            "t_end = {t_end} must exceed the state time {}",
            state.time
        )));
    }

    let n = state.n();
    let system = CartesianSystem::new(state.strengths.clone());
    let y0 = flatten_positions(&state.positions);

    let collision_radius = cfg.collision_radius;
    let blow_up_radius = cfg.blow_up_radius;
    let min_distance_gap = move |_t: f64, y: &[f64]| -> f64 {
        let mut min_sq = f64::INFINITY;
        for (i, j) in pairs(n) {
            let dx = y[2 * i] - y[2 * j];
            let dy = y[2 * i + 1] - y[2 * j + 1];
            min_sq = min_sq.min(dx * dx + dy * dy);
        }
        min_sq.sqrt() - collision_radius
    };
    let blow_up_gap = move |_t: f64, y: &[f64]| -> f64 {
        let mut max_sq: f64 = 0.0;
        for i in 0..n {
            max_sq = max_sq.max(y[2 * i] * y[2 * i] + y[2 * i + 1] * y[2 * i + 1]);
        }
        blow_up_radius - max_sq.sqrt()
    };
    let events: [&dyn Fn(f64, &[f64]) -> f64; 2] = [&min_distance_gap, &blow_up_gap];

    let mut raw: Vec<(f64, Vec<f64>)> = Vec::new();
    let outcome = ode::integrate(
        &system,
        state.time,
        &y0,
        t_end,
        &cfg.solver_options(),
        &events,
        |t, y| raw.push((t, y.to_vec())),
    )?;

    let termination = match outcome.reason {
        StopReason::Completed => Termination::TimeLimit,
        StopReason::Event { index: 0 } => Termination::CollisionEvent,
        StopReason::Event { .. } => Termination::BlowUp,
        StopReason::StepCollapse => Termination::StepCollapse,
    };

    let mut samples = Vec::with_capacity(raw.len());
    let mut min_pair_distance = Vec::with_capacity(raw.len());
    for (t, y) in raw {
        let s = VortexState {
            positions: positions_from_flat(&y),
            strengths: state.strengths.clone(),
            time: t,
        };
        let invariants = s.invariants()?;
        min_pair_distance.push(s.min_pair_distance());
        samples.push(TrajectorySample { time: t, state: s, invariants });
    }

    Ok(Trajectory { samples, termination, min_pair_distance })
}
