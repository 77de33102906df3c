//! The centrally symmetric four-vortex configuration class and its
//! bounded-collapse constraint curve.
//!
//! Vertices are listed so that the first and last carry one strength g1 and
//! the middle two carry the other strength g2; the antipodal vertex pairs
//! are (1, 4) and (2, 3), and the quadrilateral's cyclic order is 1, 2, 4, 3.
//! Writing c for the center and P, Q for the half-diagonal offsets, the
//! positions are z = (c+P, c+Q, c-Q, c-P). Two equalities then hold exactly,
//!
//! ```text
//! b12 = b34 = |P - Q|^2,    b13 = b24 = |P + Q|^2,
//! ```
//!
//! the diagonal squares are b14 = 4|P|^2 and b23 = 4|Q|^2, and the
//! quadrilateral law b14 + b23 = 2(b12 + b13) holds identically. Because
//! equal strengths sit at antipodal vertices, the flow commutes with the
//! point reflection through c composed with the label swap (1 4)(2 3), so
//! the class is invariant: both equalities persist along the evolution.
//!
//! For mixed-sign strengths, zero M, and fixed energy, the shape variables
//! x = b12, y = b13, z = b23 are confined to a one-parameter curve,
//!
//! ```text
//! f1(β) z = h (x y)^δ,      (1 + β) z = 2 (x + y),
//! ```
//!
//! with β = |g2/g1|, δ = 2|g1 g2|/(g1² + g2²), f1(β) = β^{1/(1+β²)}, and h
//! the energy constant exp(-4πH)^{1/(g1²+g2²)}; the remaining coordinates
//! follow as b14 = βz, b24 = y, b34 = x. The curve is parametrized by
//! p = y/x as
//!
//! ```text
//! x = (γ p^δ / (1+p))^α,   y = (γ p^{1-δ} / (1+p))^α,   z = 2(x+y)/(1+β),
//! ```
//!
//! with γ = h(1+β)/(2 f1(β)) and α = 1/(1-2δ). Useful identities:
//! 1 + δ = (|g1|+|g2|)²/(g1²+g2²), and the summed pair-strength product of
//! the pattern satisfies V = (g1²+g2²)(1-2δ), so δ < 1/2, = 1/2, > 1/2
//! correspond to V > 0, = 0, < 0. At δ = 1/2 the constraint degenerates to
//! the scale-invariant relation f2 (x+y) = √(xy), which by the arithmetic-
//! geometric mean inequality has solutions only when f2 ≤ 1/2: rays of
//! fixed shape, the self-similar regime. [`CollapseCurve`] therefore
//! rejects δ = 1/2, while [`CurveParams`] and the scaling profile remain
//! usable there.
//!
//! Not every curve point is a planar configuration: realizability requires
//! |y - x| ≤ √β z, which confines p to [((√β-1)/(√β+1))², its reciprocal].
//! Outside that arc the would-be angle between the half-diagonals has
//! |cos θ| > 1 and a triangle inequality fails.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::VortexError;
use crate::state::VortexState;
use crate::Result;

/// Threshold below which |1 - 2δ| is treated as the degenerate δ = 1/2.
const DELTA_HALF_TOL: f64 = 1e-12;
/// Relative tolerance for the strength pattern check.
const PATTERN_REL_TOL: f64 = 1e-12;
/// Relative tolerance on the initial symmetry residuals accepted by
/// [`check_preservation`].
const INITIAL_SYMMETRY_REL_TOL: f64 = 1e-6;

/// The strength vector of the class: g1 at the antipodal pair (1, 4), g2 at
/// (2, 3).
pub fn pattern_strengths(g1: f64, g2: f64) -> [f64; 4] {
    [g1, g2, g2, g1]
}

/// Extracts (g1, g2) from a strength vector, requiring the pattern
/// (g1, g2, g2, g1) to within relative tolerance.
pub fn check_pattern(strengths: &[f64]) -> Result<(f64, f64)> {
    if strengths.len() != 4 {
        return Err(VortexError::StrengthCondition(format!(
            "the configuration class needs 4 vortices, got {}",
            strengths.len()
        )));
    }
    let scale = strengths.iter().map(|g| g.abs()).fold(0.0f64, f64::max);
    if (strengths[0] - strengths[3]).abs() > PATTERN_REL_TOL * scale
        || (strengths[1] - strengths[2]).abs() > PATTERN_REL_TOL * scale
    {
        return Err(VortexError::StrengthCondition(
            "strengths must follow the pattern (g1, g2, g2, g1)".into(),
        ));
    }
    Ok((strengths[0], strengths[1]))
}

/// Builds the state (c+P, c+Q, c-Q, c-P) with pattern strengths.
pub fn build_state(
    center: Complex64,
    p_off: Complex64,
    q_off: Complex64,
    g1: f64,
    g2: f64,
) -> Result<VortexState> {
    VortexState::new(
        vec![center + p_off, center + q_off, center - q_off, center - p_off],
        pattern_strengths(g1, g2).to_vec(),
    )
}

/// The two symmetry residuals and the quadrilateral-law residual of a
/// four-vortex state, each divided by ρ: |b12-b34|, |b13-b24|, and
/// |b14 + b23 - 2(b12 + b13)|.
pub fn symmetry_residuals(state: &VortexState) -> Result<[f64; 3]> {
    if state.n() != 4 {
        return Err(VortexError::InvalidState(format!(
            "the configuration class needs 4 vortices, got {}",
            state.n()
        )));
    }
    let b = state.squared_distances();
    let rho: f64 = b.iter().sum();
    let [b12, b13, b14, b23, b24, b34] = [b[0], b[1], b[2], b[3], b[4], b[5]];
    Ok([
        (b12 - b34).abs() / rho,
        (b13 - b24).abs() / rho,
        (b14 + b23 - 2.0 * (b12 + b13)).abs() / rho,
    ])
}

/// Worst-case residuals of the class equalities along a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreservationReport {
    /// max over samples of |b12 - b34|/ρ.
    pub max_side_residual: f64,
    /// max over samples of |b13 - b24|/ρ.
    pub max_cross_residual: f64,
    /// max over samples of |b14 + b23 - 2(b12 + b13)|/ρ.
    pub max_law_residual: f64,
    pub samples: usize,
}

impl PreservationReport {
    /// Largest of the two symmetry residuals.
    pub fn worst(&self) -> f64 {
        self.max_side_residual.max(self.max_cross_residual)
    }
}

/// Measures how well an integrated trajectory preserves the class
/// equalities. Errors when the strengths do not follow the pattern or the
/// initial state is not in the class.
pub fn check_preservation(traj: &Trajectory) -> Result<PreservationReport> {
    check_pattern(traj.strengths())?;
    let initial = symmetry_residuals(&traj.first().state)?;
    if initial[0] > INITIAL_SYMMETRY_REL_TOL || initial[1] > INITIAL_SYMMETRY_REL_TOL {
        return Err(VortexError::InvalidState(format!(
            "initial state is not in the configuration class: residuals {:.3e}, {:.3e}",
            initial[0], initial[1]
        )));
    }
    let mut report = PreservationReport {
        max_side_residual: 0.0,
        max_cross_residual: 0.0,
        max_law_residual: 0.0,
        samples: traj.len(),
    };
    for sample in &traj.samples {
        let r = symmetry_residuals(&sample.state)?;
        report.max_side_residual = report.max_side_residual.max(r[0]);
        report.max_cross_residual = report.max_cross_residual.max(r[1]);
        report.max_law_residual = report.max_law_residual.max(r[2]);
    }
    Ok(report)
}

/// Strength-derived constants of the collapse constraint, valid for any
/// mixed-sign pair including the degenerate δ = 1/2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveParams {
    pub g1: f64,
    pub g2: f64,
    /// β = |g2/g1|.
    pub beta: f64,
    /// δ = 2|g1 g2|/(g1² + g2²), in (0, 1].
    pub delta: f64,
    /// f1(β) = β^{1/(1+β²)}.
    pub f1_beta: f64,
    /// Energy constant of the constraint, exp(-4πH)^{1/(g1²+g2²)}.
    pub h: f64,
    /// γ = h (1+β)/(2 f1(β)).
    pub gamma: f64,
    /// A = h/f1(β), the amplitude entering the scaling profile.
    pub amplitude: f64,
}

impl CurveParams {
    /// Validates the strengths (nonzero, opposite signs) and the energy
    /// constant (positive, finite).
    pub fn new(g1: f64, g2: f64, h: f64) -> Result<Self> {
        if g1 == 0.0 || g2 == 0.0 || !g1.is_finite() || !g2.is_finite() {
            return Err(VortexError::StrengthCondition(
                "curve strengths must be nonzero and finite".into(),
            ));
        }
        if g1 * g2 >= 0.0 {
            return Err(VortexError::StrengthCondition(
                "bounded collapse requires opposite-sign strengths".into(),
            ));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(VortexError::InvalidConfig(format!(
                "energy constant must be positive and finite, got {h}"
            )));
        }
        let beta = (g2 / g1).abs();
        let delta = 2.0 * (g1 * g2).abs() / (g1 * g1 + g2 * g2);
        let f1_beta = beta.powf(1.0 / (1.0 + beta * beta));
        Ok(CurveParams {
            g1,
            g2,
            beta,
            delta,
            f1_beta,
            h,
            gamma: h * (1.0 + beta) / (2.0 * f1_beta),
            amplitude: h / f1_beta,
        })
    }

    /// The summed pair-strength product of the pattern (g1, g2, g2, g1),
    /// equal to (g1² + g2²)(1 - 2δ).
    pub fn pattern_virial(&self) -> f64 {
        4.0 * self.g1 * self.g2 + self.g1 * self.g1 + self.g2 * self.g2
    }

    /// The scaling profile (p^δ, p^{1-δ}, A^{1-2δ} p): the component-wise
    /// leading scaling of the constrained shape variables toward collapse.
    pub fn scaling_profile(&self, p: f64) -> Result<[f64; 3]> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(VortexError::DomainViolation {
                expression: "profile parameter p".into(),
                value: p,
            });
        }
        Ok([
            p.powf(self.delta),
            p.powf(1.0 - self.delta),
            self.amplitude.powf(1.0 - 2.0 * self.delta) * p,
        ])
    }

    /// The normalized limit of the scaling profile as p → 0: (1,0,0) for
    /// δ < 1/2, (1,1,0)/√2 at δ = 1/2, (0,1,0) for δ > 1/2.
    pub fn profile_limit_direction(&self) -> [f64; 3] {
        let gap = 1.0 - 2.0 * self.delta;
        if gap.abs() < DELTA_HALF_TOL {
            [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2, 0.0]
        } else if gap > 0.0 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        }
    }

    /// The p-interval on which curve points are planar configurations:
    /// [((√β-1)/(√β+1))², ((√β+1)/(√β-1))²]. For β = 1 the interval is all
    /// of (0, ∞).
    pub fn realizable_range(&self) -> (f64, f64) {
        let s = self.beta.sqrt();
        if self.beta == 1.0 {
            return (0.0, f64::INFINITY);
        }
        let lo = ((s - 1.0) / (s + 1.0)).powi(2);
        (lo, 1.0 / lo)
    }
}

/// One point of the constraint curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvePoint {
    /// The projective parameter p = y/x.
    pub p: f64,
    /// b12 = b34.
    pub x: f64,
    /// b13 = b24.
    pub y: f64,
    /// b23; the other diagonal is b14 = βz.
    pub z: f64,
}

impl CurvePoint {
    /// The full squared-distance vector (b12, b13, b14, b23, b24, b34).
    pub fn squared_distances(&self, beta: f64) -> [f64; 6] {
        [self.x, self.y, beta * self.z, self.z, self.y, self.x]
    }

    /// Sum of the three curve coordinates, the collapse gauge.
    pub fn size(&self) -> f64 {
        self.x + self.y + self.z
    }
}

/// Residuals of the two defining relations at (x, y, z): the energy
/// constraint in log space, |ln(f1 z) - ln h - δ ln(xy)| / max(1, |ln h +
/// δ ln(xy)|), and the law constraint |(1+β)z - 2(x+y)| / (2(x+y)).
pub fn constraint_residuals(params: &CurveParams, x: f64, y: f64, z: f64) -> [f64; 2] {
    let rhs_log = params.h.ln() + params.delta * (x * y).ln();
    let energy = (params.f1_beta * z).ln() - rhs_log;
    let law = ((1.0 + params.beta) * z - 2.0 * (x + y)).abs() / (2.0 * (x + y));
    [energy.abs() / rhs_log.abs().max(1.0), law]
}

/// The one-parameter constraint curve for δ ≠ 1/2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollapseCurve {
    pub params: CurveParams,
    /// α = 1/(1 - 2δ).
    pub alpha: f64,
}

impl CollapseCurve {
    /// Errors at δ = 1/2, where the parametrization exponent α is undefined
    /// and the constraint degenerates to self-similar rays.
    pub fn new(params: CurveParams) -> Result<Self> {
        let gap = 1.0 - 2.0 * params.delta;
        if gap.abs() < DELTA_HALF_TOL {
            return Err(VortexError::ParallelogramDomain(
                "δ = 1/2 is degenerate: the constraint is scale invariant and admits only \
                 self-similar rays (present exactly when f2 ≤ 1/2); the curve parametrization \
                 does not apply"
                    .into(),
            ));
        }
        Ok(CollapseCurve { params, alpha: 1.0 / gap })
    }

    /// Convenience constructor from strengths and the energy constant.
    pub fn from_strengths(g1: f64, g2: f64, h: f64) -> Result<Self> {
        CollapseCurve::new(CurveParams::new(g1, g2, h)?)
    }

    /// Evaluates the curve at p > 0. Computed in log space for accuracy.
    pub fn point(&self, p: f64) -> Result<CurvePoint> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(VortexError::DomainViolation {
                expression: "curve parameter p".into(),
                value: p,
            });
        }
        let params = &self.params;
        let base = params.gamma.ln() - p.ln_1p();
        let x = (self.alpha * (base + params.delta * p.ln())).exp();
        let y = (self.alpha * (base + (1.0 - params.delta) * p.ln())).exp();
        let z = 2.0 * (x + y) / (1.0 + params.beta);
        Ok(CurvePoint { p, x, y, z })
    }

    /// Samples the collapsing branch: a geometric descent p_start·r^k,
    /// k = 0..count, r < 1, verified to shrink the collapse gauge x+y+z
    /// strictly at every step. Errors when the curve has no collapsing
    /// branch (δ > 1/2, where both ends of the curve blow up).
    pub fn collapsing_branch(
        &self,
        p_start: f64,
        ratio: f64,
        count: usize,
    ) -> Result<Vec<CurvePoint>> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(VortexError::InvalidConfig(format!(
                "descent ratio must lie in (0, 1), got {ratio}"
            )));
        }
        let mut points = Vec::with_capacity(count + 1);
        let mut p = p_start;
        for _ in 0..=count {
            points.push(self.point(p)?);
            p *= ratio;
        }
        for pair in points.windows(2) {
            if !(pair[1].size() < pair[0].size()) {
                return Err(VortexError::ParallelogramDomain(format!(
                    "no collapsing branch: the collapse gauge grows from {:.6e} to {:.6e} \
                     as p descends",
                    pair[0].size(),
                    pair[1].size()
                )));
            }
        }
        Ok(points)
    }

    /// The normalized tangent direction of (x, y, z) at the collapsing end
    /// p → 0: proportional to (1, 0, 2/(1+β)), since y/x → 0 while
    /// z = 2(x+y)/(1+β) stays locked to x.
    pub fn limit_direction(&self) -> [f64; 3] {
        let w = 2.0 / (1.0 + self.params.beta);
        let norm = (1.0 + w * w).sqrt();
        [1.0 / norm, 0.0, w / norm]
    }

    /// Realizes a curve point as a planar state centered at `center` with
    /// the g1 half-diagonal P at angle `orientation`. Errors outside the
    /// realizable p-range.
    pub fn realize_state(
        &self,
        p: f64,
        center: Complex64,
        orientation: f64,
    ) -> Result<VortexState> {
        let pt = self.point(p)?;
        let params = &self.params;
        let p_norm = (params.beta * pt.z).sqrt() / 2.0;
        let q_norm = pt.z.sqrt() / 2.0;
        let cos_theta = (pt.y - pt.x) / (4.0 * p_norm * q_norm);
        if cos_theta.abs() > 1.0 {
            return Err(VortexError::ParallelogramDomain(format!(
                "curve point at p = {p} is not planar: the half-diagonal angle would need \
                 cos θ = {cos_theta:.6}; the realizable range is {:?}",
                self.params.realizable_range()
            )));
        }
        let theta = cos_theta.acos();
        let p_off = Complex64::from_polar(p_norm, orientation);
        let q_off = Complex64::from_polar(q_norm, orientation + theta);
        build_state(center, p_off, q_off, params.g1, params.g2)
    }
}
