//! Energy expansion around a shrinking binary and the averaged
//! one-degree-of-freedom flow in the reduced coordinates.
//!
//! Everything here assumes the strength condition Γ₁ + Γ₂ = Γ₃ = Γ₄ =: Γ.
//! In the reduced coordinates of [`super::chain`], with ε = √(2i) the
//! binary separation and S = √(i₂² - i₁²), the energy splits as
//! H = H₀ + ε H₁ + ε² H₂ + O(ε³) where
//!
//! * 4π H₀ = 2Γ₂(Γ₂ - Γ) ln ε - Γ² (ln L₁ + ln L₂ + ln L₃), with
//!   L₁ = -2(i₂ + S cos 2φ₁),
//!   L₂ = S cos 2φ₁ - 2i₂ - √3 S sin 2φ₁,
//!   L₃ = -2i₂ + S cos 2φ₁ + √3 S sin 2φ₁.
//!   The three logs are exactly the squared distances of the system in
//!   which the binary is collapsed to its center: L₁ = |z₃ - z₄|²,
//!   L₂ = |z_c - z₄|², L₃ = |z_c - z₃|², so H₀ is the collapsed three-vortex
//!   energy plus the binary's own term -(Γ₁Γ₂/2π) ln ε.
//! * H₁ vanishes identically: placing the chart on the binary's center of
//!   vorticity cancels the first-order term.
//! * The true second-order term is
//!   H₂(φ) = (Γ₁Γ₂/4π) Σ_k cos(2φ - 2ψ_k)/|W_k|², W_k = z_c - z_k =
//!   |W_k| e^{iψ_k}, whose average over the fast binary angle φ is exactly
//!   zero. [`h2bar`] instead evaluates a closed-form averaged correction
//!   carried along with the reduced model; [`phi_average_second_order`]
//!   provides the quadrature to compare the two.
//!
//! The averaged flow keeps (i, i₀, i₂) and integrates the remaining pair
//! (i₁, φ₁) with Hamiltonian H̄ = H₀ + ε² H̄₂ and weight Γ:
//! di₁/dt = (1/Γ) ∂H̄/∂φ₁, dφ₁/dt = -(1/Γ) ∂H̄/∂i₁.

use num_complex::Complex64;

use crate::error::VortexError;
use crate::ode::{self, OdeSystem, SolverOptions, StopReason};
use crate::reduction::chain::ReducedCoords;
use crate::Result;

use std::f64::consts::PI;

/// Default ε-grid for [`numeric_h2`]: geometric between these bounds.
pub const FIT_EPS_MIN: f64 = 1e-5;
pub const FIT_EPS_MAX: f64 = 1e-3;
pub const FIT_POINTS: usize = 24;
/// Default node count for the fast-angle quadrature.
pub const AVERAGE_NODES: usize = 2048;

/// Returns Γ after checking the strength condition Γ₁ + Γ₂ = Γ₃ = Γ₄.
fn condition_strength(strengths: &[f64; 4]) -> Result<f64> {
    if !super::chain::strengths_condition(strengths) {
        return Err(VortexError::StrengthCondition(format!(
            "Γ₁+Γ₂ = {}, Γ₃ = {}, Γ₄ = {}",
            strengths[0] + strengths[1],
            strengths[2],
            strengths[3]
        )));
    }
    Ok(strengths[2])
}

/// The three log arguments (L₁, L₂, L₃) of the leading energy.
pub fn log_arguments(coords: &ReducedCoords) -> Result<[f64; 3]> {
    let s = coords.s()?;
    let i2 = coords.i[3];
    let (s2, c2) = (2.0 * coords.phi[2]).sin_cos();
    let l1 = -2.0 * (i2 + s * c2);
    let l2 = s * c2 - 2.0 * i2 - 3f64.sqrt() * s * s2;
    let l3 = -2.0 * i2 + s * c2 + 3f64.sqrt() * s * s2;
    for (name, l) in [("L₁", l1), ("L₂", l2), ("L₃", l3)] {
        if l <= 0.0 {
            return Err(VortexError::DomainViolation {
                expression: format!("log argument {name}"),
                value: l,
            });
        }
    }
    Ok([l1, l2, l3])
}

/// Leading term of the energy in reduced coordinates.
pub fn h0(coords: &ReducedCoords, strengths: &[f64; 4]) -> Result<f64> {
    let g = condition_strength(strengths)?;
    let g2 = strengths[1];
    if coords.i[0] <= 0.0 {
        return Err(VortexError::DomainViolation {
            expression: "binary action i".into(),
            value: coords.i[0],
        });
    }
    let eps = coords.epsilon();
    let [l1, l2, l3] = log_arguments(coords)?;
    Ok((2.0 * g2 * (g2 - g) * eps.ln() - g * g * (l1.ln() + l2.ln() + l3.ln())) / (4.0 * PI))
}

/// (∂H₀/∂i₁, ∂H₀/∂φ₁).
pub fn h0_partials(coords: &ReducedCoords, strengths: &[f64; 4]) -> Result<(f64, f64)> {
    let g = condition_strength(strengths)?;
    let s = coords.s()?;
    if s == 0.0 {
        return Err(VortexError::SingularDenominator {
            expression: "S in the leading-energy gradient".into(),
        });
    }
    let i1 = coords.i[2];
    let (s2, c2) = (2.0 * coords.phi[2]).sin_cos();
    let r3 = 3f64.sqrt();
    let ls = log_arguments(coords)?;
    let ds_di1 = -i1 / s;
    let dl_di1 = [-2.0 * c2 * ds_di1, (c2 - r3 * s2) * ds_di1, (c2 + r3 * s2) * ds_di1];
    let dl_dphi1 = [
        4.0 * s * s2,
        s * (-2.0 * s2 - 2.0 * r3 * c2),
        s * (-2.0 * s2 + 2.0 * r3 * c2),
    ];
    let a = -g * g / (4.0 * PI);
    let mut di1 = 0.0;
    let mut dphi1 = 0.0;
    for k in 0..3 {
        di1 += dl_di1[k] / ls[k];
        dphi1 += dl_dphi1[k] / ls[k];
    }
    Ok((a * di1, a * dphi1))
}

/// The closed-form averaged second-order correction carried by the reduced
/// model, as a ratio of two trigonometric polynomials in (i₁, i₂, φ₁).
pub fn h2bar(coords: &ReducedCoords, strengths: &[f64; 4]) -> Result<f64> {
    let g = condition_strength(strengths)?;
    let g2 = strengths[1];
    let s = coords.s()?;
    let i1 = coords.i[2];
    let i2 = coords.i[3];
    let p2 = 2.0 * coords.phi[2];
    let (c2, c4, c6) = (p2.cos(), (2.0 * p2).cos(), (3.0 * p2).cos());
    let numerator = (2.0 * PI - 1.0)
        * g2
        * g2
        * (g2 - g)
        * (8.0 * i2.powi(3) - 12.0 * s * i2 * i2 * c2
            + 6.0 * i2 * (i2 * i2 - i1 * i1) * c4
            + s * (i1 * i1 - i2 * i2) * c6);
    let bracket = i1 * i1 + 3.0 * i2 * i2 - 4.0 * s * i2 * c2 - 2.0 * (i1 * i1 - i2 * i2) * c4;
    let denominator = 2.0 * PI * g * bracket * bracket;
    if denominator == 0.0 {
        return Err(VortexError::SingularDenominator {
            expression: "averaged-correction denominator".into(),
        });
    }
    Ok(numerator / denominator)
}

/// (∂H̄₂/∂i₁, ∂H̄₂/∂φ₁) of the closed-form averaged correction.
pub fn h2bar_partials(coords: &ReducedCoords, strengths: &[f64; 4]) -> Result<(f64, f64)> {
    let g = condition_strength(strengths)?;
    let g2 = strengths[1];
    let s = coords.s()?;
    if s == 0.0 {
        return Err(VortexError::SingularDenominator {
            expression: "S in the averaged-correction gradient".into(),
        });
    }
    let i1 = coords.i[2];
    let i2 = coords.i[3];
    let p2 = 2.0 * coords.phi[2];
    let (s2, c2) = p2.sin_cos();
    let (s4, c4) = (2.0 * p2).sin_cos();
    let (s6, c6) = (3.0 * p2).sin_cos();

    let u = 8.0 * i2.powi(3) - 12.0 * s * i2 * i2 * c2 + 6.0 * i2 * (i2 * i2 - i1 * i1) * c4
        + s * (i1 * i1 - i2 * i2) * c6;
    let du_di1 = (12.0 * i2 * i2 * i1 / s) * c2 - 12.0 * i2 * i1 * c4 + 3.0 * i1 * s * c6;
    let du_dphi1 = 24.0 * s * i2 * i2 * s2 - 24.0 * i2 * (i2 * i2 - i1 * i1) * s4
        - 6.0 * s * (i1 * i1 - i2 * i2) * s6;

    let v = i1 * i1 + 3.0 * i2 * i2 - 4.0 * s * i2 * c2 - 2.0 * (i1 * i1 - i2 * i2) * c4;
    let dv_di1 = 2.0 * i1 + (4.0 * i2 * i1 / s) * c2 - 4.0 * i1 * c4;
    let dv_dphi1 = 8.0 * s * i2 * s2 + 8.0 * (i1 * i1 - i2 * i2) * s4;
    if v == 0.0 {
        return Err(VortexError::SingularDenominator {
            expression: "averaged-correction denominator".into(),
        });
    }

    let front = (2.0 * PI - 1.0) * g2 * g2 * (g2 - g) / (2.0 * PI * g);
    let di1 = front * (du_di1 * v - 2.0 * u * dv_di1) / v.powi(3);
    let dphi1 = front * (du_dphi1 * v - 2.0 * u * dv_dphi1) / v.powi(3);
    Ok((di1, dphi1))
}

/// Positions of the collapsed system: the binary's center of vorticity and
/// the two spectators.
#[derive(Debug, Clone, Copy)]
pub struct SlowGeometry {
    pub center: Complex64,
    pub z3: Complex64,
    pub z4: Complex64,
}

impl SlowGeometry {
    pub fn from_chart(chart: &super::chart::ChartState) -> Self {
        SlowGeometry { center: chart.zeta, z3: chart.z_spec[0], z4: chart.z_spec[1] }
    }

    /// The full Cartesian state with the binary opened up to separation ζ.
    pub fn open_binary(&self, strengths: &[f64; 4], zeta: Complex64) -> Result<crate::state::VortexState> {
        let g12 = strengths[0] + strengths[1];
        if g12 == 0.0 {
            return Err(VortexError::ZeroTotalStrength {
                context: "opening a binary needs Γ₁ + Γ₂ ≠ 0".into(),
            });
        }
        crate::state::VortexState::new(
            vec![
                self.center - (strengths[1] / g12) * zeta,
                self.center + (strengths[0] / g12) * zeta,
                self.z3,
                self.z4,
            ],
            strengths.to_vec(),
        )
    }

    /// Energy of the collapsed three-vortex system with strengths
    /// (Γ₁+Γ₂, Γ₃, Γ₄).
    pub fn collapsed_energy(&self, strengths: &[f64; 4]) -> Result<f64> {
        let g12 = strengths[0] + strengths[1];
        let state = crate::state::VortexState::new(
            vec![self.center, self.z3, self.z4],
            vec![g12, strengths[2], strengths[3]],
        )?;
        Ok(state.invariants()?.energy)
    }
}

/// H(full) - H₀ evaluated without cancellation: only the four cross pairs
/// binary-member x spectator contribute, each as a log1p of a small
/// relative displacement.
pub fn excess_energy(
    slow: &SlowGeometry,
    strengths: &[f64; 4],
    zeta: Complex64,
) -> Result<f64> {
    let g12 = strengths[0] + strengths[1];
    if g12 == 0.0 {
        return Err(VortexError::ZeroTotalStrength {
            context: "energy expansion needs Γ₁ + Γ₂ ≠ 0".into(),
        });
    }
    let mut excess = 0.0;
    for (zk, gk) in [(slow.z3, strengths[2]), (slow.z4, strengths[3])] {
        let w = slow.center - zk;
        if w.norm_sqr() == 0.0 {
            return Err(VortexError::SingularDenominator {
                expression: "spectator sits on the binary center".into(),
            });
        }
        let a = (strengths[1] / g12) * zeta / w;
        let b = (strengths[0] / g12) * zeta / w;
        let ta = -2.0 * a.re + a.norm_sqr();
        let tb = 2.0 * b.re + b.norm_sqr();
        for t in [ta, tb] {
            if t <= -1.0 {
                return Err(VortexError::DomainViolation {
                    expression: "member-spectator separation ratio".into(),
                    value: t,
                });
            }
        }
        excess -= gk * (strengths[0] * ta.ln_1p() + strengths[1] * tb.ln_1p()) / (4.0 * PI);
    }
    Ok(excess)
}

/// The analytic coefficient of ε² in the energy at fixed binary angle φ:
/// (Γ₁Γ₂/4πΓ₁₂) Σ_k Γ_k Re(e^{2iφ}/W_k²).
pub fn second_order_coefficient(
    slow: &SlowGeometry,
    strengths: &[f64; 4],
    phi: f64,
) -> Result<f64> {
    let g12 = strengths[0] + strengths[1];
    if g12 == 0.0 {
        return Err(VortexError::ZeroTotalStrength {
            context: "energy expansion needs Γ₁ + Γ₂ ≠ 0".into(),
        });
    }
    let rot = Complex64::from_polar(1.0, 2.0 * phi);
    let mut total = 0.0;
    for (zk, gk) in [(slow.z3, strengths[2]), (slow.z4, strengths[3])] {
        let w = slow.center - zk;
        if w.norm_sqr() == 0.0 {
            return Err(VortexError::SingularDenominator {
                expression: "spectator sits on the binary center".into(),
            });
        }
        total += gk * (rot / (w * w)).re;
    }
    Ok(strengths[0] * strengths[1] / (4.0 * PI * g12) * total)
}

/// Uniform-node average of the second-order coefficient over the binary
/// angle; zero up to roundoff, since the coefficient is a pure second
/// harmonic in φ.
pub fn phi_average_second_order(
    slow: &SlowGeometry,
    strengths: &[f64; 4],
    nodes: usize,
) -> Result<f64> {
    if nodes < 3 {
        return Err(VortexError::InvalidConfig(
            "angle quadrature needs at least 3 nodes".into(),
        ));
    }
    let mut sum = 0.0;
    for k in 0..nodes {
        sum += second_order_coefficient(slow, strengths, 2.0 * PI * k as f64 / nodes as f64)?;
    }
    Ok(sum / nodes as f64)
}

/// n points between lo and hi, geometrically spaced, endpoints included.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let ratio = (hi / lo).powf(1.0 / (n as f64 - 1.0));
    (0..n).map(|k| lo * ratio.powi(k as i32)).collect()
}

/// Least-squares coefficients (c₁, c₂, c₃) of
/// excess(ε) ≈ c₁ε + c₂ε² + c₃ε³ at fixed binary angle. A fourth basis
/// column ε⁴ absorbs the next order so truncation does not contaminate
/// the reported coefficients; columns are normalized before solving.
pub fn fit_epsilon_powers(
    slow: &SlowGeometry,
    strengths: &[f64; 4],
    phi: f64,
    epsilons: &[f64],
) -> Result<[f64; 3]> {
    if epsilons.len() < 4 {
        return Err(VortexError::FitFailure("need at least 4 ε samples".into()));
    }
    let n = epsilons.len();
    let mut design = nalgebra::DMatrix::<f64>::zeros(n, 4);
    let mut rhs = nalgebra::DVector::<f64>::zeros(n);
    for (row, eps) in epsilons.iter().enumerate() {
        let zeta = Complex64::from_polar(*eps, phi);
        for (col, power) in (1..=4).enumerate() {
            design[(row, col)] = eps.powi(power);
        }
        rhs[row] = excess_energy(slow, strengths, zeta)?;
    }
    let mut scales = [0.0f64; 4];
    for col in 0..4 {
        let norm = design.column(col).norm();
        scales[col] = norm;
        if norm == 0.0 {
            return Err(VortexError::FitFailure("degenerate ε grid".into()));
        }
        design.column_mut(col).scale_mut(1.0 / norm);
    }
    let svd = design.svd(true, true);
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| VortexError::FitFailure(e.to_string()))?;
    Ok([sol[0] / scales[0], sol[1] / scales[1], sol[2] / scales[2]])
}

/// [`fit_epsilon_powers`] on the default geometric grid.
pub fn numeric_h2(slow: &SlowGeometry, strengths: &[f64; 4], phi: f64) -> Result<[f64; 3]> {
    fit_epsilon_powers(
        slow,
        strengths,
        phi,
        &geometric_grid(FIT_EPS_MIN, FIT_EPS_MAX, FIT_POINTS),
    )
}

/// The averaged one-degree-of-freedom system: (i, i₀, i₂) are parameters,
/// (i₁, φ₁) evolve under H̄ = H₀ + ε² H̄₂ with weight Γ.
#[derive(Debug, Clone, Copy)]
pub struct ReducedSystem {
    pub strengths: [f64; 4],
    /// Binary action i (fixes ε = √(2i)).
    pub i: f64,
    /// Centroid action i₀.
    pub i0: f64,
    /// Conserved mode action i₂ (must be negative in the domain).
    pub i2: f64,
}

impl ReducedSystem {
    /// Captures the parameters from a full set of reduced coordinates.
    pub fn from_coords(coords: &ReducedCoords, strengths: &[f64; 4]) -> Result<Self> {
        condition_strength(strengths)?;
        coords.validate()?;
        Ok(ReducedSystem { strengths: *strengths, i: coords.i[0], i0: coords.i[1], i2: coords.i[3] })
    }

    /// Full coordinate vector at a point of the (i₁, φ₁) plane; the cyclic
    /// angles are set to zero.
    pub fn coords_at(&self, i1: f64, phi1: f64) -> ReducedCoords {
        ReducedCoords { i: [self.i, self.i0, i1, self.i2], phi: [0.0, 0.0, phi1, 0.0] }
    }

    /// The common weight Γ of the slow canonical pairs.
    pub fn weight(&self) -> f64 {
        self.strengths[2]
    }

    /// ε² = 2i.
    pub fn eps_squared(&self) -> f64 {
        2.0 * self.i
    }

    /// H̄ = H₀ + ε² H̄₂.
    pub fn hbar(&self, i1: f64, phi1: f64) -> Result<f64> {
        let coords = self.coords_at(i1, phi1);
        Ok(h0(&coords, &self.strengths)? + self.eps_squared() * h2bar(&coords, &self.strengths)?)
    }

    /// (∂H̄/∂i₁, ∂H̄/∂φ₁).
    pub fn hbar_partials(&self, i1: f64, phi1: f64) -> Result<(f64, f64)> {
        let coords = self.coords_at(i1, phi1);
        let (a0, b0) = h0_partials(&coords, &self.strengths)?;
        let (a2, b2) = h2bar_partials(&coords, &self.strengths)?;
        let e2 = self.eps_squared();
        Ok((a0 + e2 * a2, b0 + e2 * b2))
    }
}

impl OdeSystem for ReducedSystem {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, _t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        let (d_i1, d_phi1) = self.hbar_partials(y[0], y[1])?;
        dydt[0] = d_phi1 / self.weight();
        dydt[1] = -d_i1 / self.weight();
        Ok(())
    }
}

/// One sample of the averaged flow.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ReducedSample {
    pub t: f64,
    pub i1: f64,
    pub phi1: f64,
}

/// Result of integrating the averaged flow.
#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    pub system: ReducedSystem,
    pub samples: Vec<ReducedSample>,
    pub reason: StopReason,
}

impl ReducedTrajectory {
    /// Largest |H̄(t) - H̄(0)| over the samples.
    pub fn hbar_drift(&self) -> Result<f64> {
        let first = self.system.hbar(self.samples[0].i1, self.samples[0].phi1)?;
        let mut drift = 0.0f64;
        for s in &self.samples {
            drift = drift.max((self.system.hbar(s.i1, s.phi1)? - first).abs());
        }
        Ok(drift)
    }

    /// Linear interpolation of (i₁, φ₁) at time t inside the covered range.
    pub fn sample_at(&self, t: f64) -> Option<(f64, f64)> {
        let samples = &self.samples;
        if samples.is_empty() {
            return None;
        }
        let t0 = samples.first().unwrap().t;
        let t1 = samples.last().unwrap().t;
        if t < t0.min(t1) || t > t0.max(t1) {
            return None;
        }
        let pos = samples.windows(2).position(|w| {
            let (a, b) = (w[0].t.min(w[1].t), w[0].t.max(w[1].t));
            a <= t && t <= b
        })?;
        let (s0, s1) = (&samples[pos], &samples[pos + 1]);
        if s0.t == s1.t {
            return Some((s0.i1, s0.phi1));
        }
        let theta = (t - s0.t) / (s1.t - s0.t);
        Some((s0.i1 + theta * (s1.i1 - s0.i1), s0.phi1 + theta * (s1.phi1 - s0.phi1)))
    }
}

/// Integrates the averaged flow from (i₁, φ₁), stopping at the domain edge
/// (S² falling to a sliver of i₂²) or when a collapsed-system collision
/// drives a log argument to zero.
pub fn integrate_reduced(
    system: &ReducedSystem,
    i1: f64,
    phi1: f64,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<ReducedTrajectory> {
    condition_strength(&system.strengths)?;
    let edge_margin = 1e-12 * system.i2 * system.i2;
    let domain_edge = move |_t: f64, y: &[f64]| system.i2 * system.i2 - y[0] * y[0] - edge_margin;
    let log_floor = {
        let sys = *system;
        move |_t: f64, y: &[f64]| {
            let coords = sys.coords_at(y[0], y[1]);
            match log_arguments(&coords) {
                Ok(ls) => ls.iter().fold(f64::INFINITY, |a, l| a.min(*l)),
                Err(_) => 0.0,
            }
        }
    };
    let mut samples = Vec::new();
    let outcome = ode::integrate(
        system,
        0.0,
        &[i1, phi1],
        t_end,
        opts,
        &[&domain_edge, &log_floor],
        |t, y| samples.push(ReducedSample { t, i1: y[0], phi1: y[1] }),
    )?;
    Ok(ReducedTrajectory { system: *system, samples, reason: outcome.reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::chain::{self, ReducedCoords};
    use crate::reduction::chart;
    use crate::state::VortexState;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const STRENGTHS: [f64; 4] = [0.3, 0.7, 1.0, 1.0];

    fn random_condition_state(rng: &mut ChaCha8Rng) -> VortexState {
        loop {
            let positions: Vec<Complex64> = (0..4)
                .map(|_| Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
                .collect();
            if let Ok(state) = VortexState::new(positions, STRENGTHS.to_vec()) {
                let min = state.min_pair_distance();
                if min > 0.15 {
                    return state;
                }
            }
        }
    }

    fn sample_slow_geometry() -> SlowGeometry {
        SlowGeometry {
            center: Complex64::new(0.15, -0.1),
            z3: Complex64::new(-0.8, 0.65),
            z4: Complex64::new(0.7, 0.9),
        }
    }

    #[test]
    fn leading_energy_is_binary_term_plus_collapsed_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let state = random_condition_state(&mut rng);
            let coords = match chain::to_reduced(&state) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let value = match h0(&coords, &STRENGTHS) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let chart = chart::to_binary_chart(&state, (0, 1)).unwrap();
            let slow = SlowGeometry::from_chart(&chart);
            let oracle = -(STRENGTHS[0] * STRENGTHS[1] / (2.0 * PI)) * coords.epsilon().ln()
                + slow.collapsed_energy(&STRENGTHS).unwrap();
            assert_relative_eq!(value, oracle, max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn log_arguments_are_the_collapsed_squared_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let state = random_condition_state(&mut rng);
            let coords = chain::to_reduced(&state).unwrap();
            let ls = match log_arguments(&coords) {
                Ok(ls) => ls,
                Err(_) => continue,
            };
            let chart = chart::to_binary_chart(&state, (0, 1)).unwrap();
            let b34 = (chart.z_spec[0] - chart.z_spec[1]).norm_sqr();
            let bc4 = (chart.zeta - chart.z_spec[1]).norm_sqr();
            let bc3 = (chart.zeta - chart.z_spec[0]).norm_sqr();
            assert_relative_eq!(ls[0], b34, max_relative = 1e-12);
            assert_relative_eq!(ls[1], bc4, max_relative = 1e-12);
            assert_relative_eq!(ls[2], bc3, max_relative = 1e-12);
        }
    }

    #[test]
    fn excess_energy_matches_naive_subtraction_at_moderate_separation() {
        let slow = sample_slow_geometry();
        let zeta = Complex64::from_polar(1e-2, 0.77);
        let excess = excess_energy(&slow, &STRENGTHS, zeta).unwrap();
        let full = slow.open_binary(&STRENGTHS, zeta).unwrap();
        let h_full = full.invariants().unwrap().energy;
        let h0_exact = -(STRENGTHS[0] * STRENGTHS[1] / (2.0 * PI)) * zeta.norm().ln()
            + slow.collapsed_energy(&STRENGTHS).unwrap();
        assert_relative_eq!(excess, h_full - h0_exact, max_relative = 1e-9, epsilon = 1e-14);
    }

    #[test]
    fn excess_energy_is_second_order() {
        let slow = sample_slow_geometry();
        let phi = 0.4;
        let h2 = second_order_coefficient(&slow, &STRENGTHS, phi).unwrap();
        for eps in [1e-3, 1e-4] {
            let excess = excess_energy(&slow, &STRENGTHS, Complex64::from_polar(eps, phi)).unwrap();
            assert_relative_eq!(excess / (eps * eps), h2, max_relative = 2e-2);
        }
    }

    #[test]
    fn first_order_coefficient_is_numerically_absent() {
        let slow = sample_slow_geometry();
        for phi in [0.0, 0.9, 2.3] {
            let [c1, c2, _] = numeric_h2(&slow, &STRENGTHS, phi).unwrap();
            assert!(
                c1.abs() <= 1e-6 * c2.abs(),
                "c1 = {c1:.3e} not small next to c2 = {c2:.3e} at phi = {phi}"
            );
        }
    }

    #[test]
    fn fitted_second_order_matches_the_analytic_coefficient() {
        let slow = sample_slow_geometry();
        for phi in [0.2, 1.5] {
            let [_, c2, _] = numeric_h2(&slow, &STRENGTHS, phi).unwrap();
            let analytic = second_order_coefficient(&slow, &STRENGTHS, phi).unwrap();
            assert_relative_eq!(c2, analytic, max_relative = 1e-6);
            let fine = fit_epsilon_powers(
                &slow,
                &STRENGTHS,
                phi,
                &geometric_grid(FIT_EPS_MIN, FIT_EPS_MAX, 2 * FIT_POINTS - 1),
            )
            .unwrap();
            assert_relative_eq!(fine[1], c2, max_relative = 1e-6);
        }
    }

    #[test]
    fn fast_angle_average_of_the_second_order_term_vanishes() {
        let slow = sample_slow_geometry();
        let scale = (0..8)
            .map(|k| {
                second_order_coefficient(&slow, &STRENGTHS, PI * k as f64 / 8.0)
                    .unwrap()
                    .abs()
            })
            .fold(0.0f64, f64::max);
        let avg = phi_average_second_order(&slow, &STRENGTHS, AVERAGE_NODES).unwrap();
        assert!(avg.abs() <= 1e-13 * scale, "average {avg:.3e} vs scale {scale:.3e}");
    }

    #[test]
    fn printed_correction_numerator_has_the_cubic_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let i2 = -rng.gen_range(0.2..2.0f64);
            let i1 = rng.gen_range(-0.99..0.99f64) * i2.abs();
            let phi1 = rng.gen_range(0.0..PI);
            let coords =
                ReducedCoords { i: [0.1, 0.0, i1, i2], phi: [0.0, 0.0, phi1, 0.0] };
            let s = coords.s().unwrap();
            let p2 = 2.0 * phi1;
            let printed = 8.0 * i2.powi(3) - 12.0 * s * i2 * i2 * p2.cos()
                + 6.0 * i2 * (i2 * i2 - i1 * i1) * (2.0 * p2).cos()
                + s * (i1 * i1 - i2 * i2) * (3.0 * p2).cos();
            let cubic = (Complex64::new(2.0 * i2, 0.0)
                - s * Complex64::from_polar(1.0, p2))
            .powu(3)
            .re;
            assert_relative_eq!(printed, cubic, max_relative = 1e-11, epsilon = 1e-12);
        }
    }

    #[test]
    fn analytic_partials_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..20 {
            let i2 = -rng.gen_range(0.3..1.5f64);
            let i1 = rng.gen_range(-0.7..0.7f64) * i2.abs();
            let phi1 = rng.gen_range(0.1..3.0f64);
            let coords = ReducedCoords { i: [0.05, 0.0, i1, i2], phi: [0.0, 0.0, phi1, 0.0] };
            if log_arguments(&coords).is_err() {
                continue;
            }
            let probes: [(fn(&ReducedCoords, &[f64; 4]) -> Result<f64>,
                fn(&ReducedCoords, &[f64; 4]) -> Result<(f64, f64)>); 2] =
                [(h0, h0_partials), (h2bar, h2bar_partials)];
            for (value, partials) in probes {
                let (di1, dphi1) = match partials(&coords, &STRENGTHS) {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                let hi = 1e-6 * i2.abs();
                let mut up = coords;
                up.i[2] += hi;
                let mut dn = coords;
                dn.i[2] -= hi;
                if let (Ok(vu), Ok(vd)) = (value(&up, &STRENGTHS), value(&dn, &STRENGTHS)) {
                    let fd = (vu - vd) / (2.0 * hi);
                    assert_relative_eq!(di1, fd, max_relative = 1e-5, epsilon = 1e-9);
                }
                let ha = 1e-6;
                let mut up = coords;
                up.phi[2] += ha;
                let mut dn = coords;
                dn.phi[2] -= ha;
                if let (Ok(vu), Ok(vd)) = (value(&up, &STRENGTHS), value(&dn, &STRENGTHS)) {
                    let fd = (vu - vd) / (2.0 * ha);
                    assert_relative_eq!(dphi1, fd, max_relative = 1e-5, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn balanced_perpendicular_point_is_critical() {
        let system = ReducedSystem { strengths: STRENGTHS, i: 5e-7, i0: 0.3, i2: -0.8 };
        let (di1, dphi1) = system.hbar_partials(0.0, PI / 2.0).unwrap();
        assert!(di1.abs() < 1e-12);
        assert!(dphi1.abs() < 1e-12);
    }

    #[test]
    fn averaged_flow_conserves_its_hamiltonian() {
        let system = ReducedSystem { strengths: STRENGTHS, i: 5e-7, i0: 0.3, i2: -0.8 };
        let opts = SolverOptions { rel_tol: 1e-11, abs_tol: 1e-13, ..Default::default() };
        let traj = integrate_reduced(&system, 0.25, 1.9, 50.0, &opts).unwrap();
        assert_eq!(traj.reason, StopReason::Completed);
        assert!(traj.samples.len() > 20);
        let h_scale = system.hbar(0.25, 1.9).unwrap().abs().max(1.0);
        assert!(traj.hbar_drift().unwrap() < 1e-9 * h_scale);
    }

    #[test]
    fn averaged_flow_stops_at_the_domain_edge() {
        let system = ReducedSystem { strengths: STRENGTHS, i: 5e-7, i0: 0.3, i2: -0.8 };
        let opts = SolverOptions::default();
        let traj = integrate_reduced(&system, 0.8 * (1.0 - 1e-14), 0.4, 50.0, &opts).unwrap();
        match traj.reason {
            StopReason::Event { .. } => {}
            other => panic!("expected a domain-edge stop, got {other:?}"),
        }
    }

    #[test]
    fn condition_violating_strengths_are_rejected() {
        let coords = ReducedCoords { i: [0.1, 0.0, 0.1, -0.5], phi: [0.0; 4] };
        assert!(matches!(
            h0(&coords, &[0.3, 0.7, 1.0, 1.2]),
            Err(VortexError::StrengthCondition(_))
        ));
        assert!(matches!(
            h2bar(&coords, &[1.0, 1.0, 2.0, 1.0]),
            Err(VortexError::StrengthCondition(_))
        ));
    }
}
