//! Phase-space states and the conserved quantities of planar vortex motion.
//!
//! A state is a list of vortex positions `z_α` (complex numbers standing for
//! points of the plane) together with their circulation strengths `Γ_α` and a
//! time stamp. The motion conserves
//!
//! ```text
//! H = −(1/4π) Σ_{α<β} Γ_α Γ_β ln b_αβ          (energy, b = squared distance)
//! Z = Σ_α Γ_α z_α                              (moment of vorticity)
//! I = Σ_α Γ_α |z_α|²                           (angular impulse)
//! M = Σ_{α<β} Γ_α Γ_β b_αβ = Γ I − |Z|²        (second identity needs Γ ≠ 0)
//! ```
//!
//! where `Γ = Σ Γ_α`. The virial `V = Σ_{α<β} Γ_α Γ_β` depends only on the
//! strengths. The kinematic sum `Σ Γ_α z_α × ż_α` equals `V/(2π)` identically,
//! which pins down the normalization between the two ways of writing the
//! virial; the pair-sum form is the canonical one stored in [`InvariantSet`],
//! and [`VortexState::kinematic_virial`] is exposed as the cross-check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::VortexError;
use crate::Result;

/// Ordered lexicographic pair indices `(0,1), (0,2), …, (n−2, n−1)`.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Number of unordered pairs among `n` vortices.
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Position of the pair `(i, j)`, `i < j`, in lexicographic pair order.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// A phase-space point: vortex positions, strengths, and the current time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexState {
    /// Vortex positions as points of the plane.
    pub positions: Vec<Complex64>,
    /// Circulation strengths Γ_α, each nonzero.
    pub strengths: Vec<f64>,
    /// Time stamp carried along by the integrator.
    pub time: f64,
}

impl VortexState {
    /// Builds a state at time zero and validates it.
    pub fn new(positions: Vec<Complex64>, strengths: Vec<f64>) -> Result<Self> {
        Self::at_time(positions, strengths, 0.0)
    }

    /// Builds a state with an explicit time stamp and validates it.
    pub fn at_time(positions: Vec<Complex64>, strengths: Vec<f64>, time: f64) -> Result<Self> {
        let state = VortexState { positions, strengths, time };
        state.validate()?;
        Ok(state)
    }

    /// Number of vortices.
    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// Checks the structural invariants: at least two vortices, matching
    /// lengths, nonzero strengths, finite coordinates, and strictly positive
    /// pairwise distances.
    pub fn validate(&self) -> Result<()> {
        if self.positions.len() < 2 {
            return Err(VortexError::InvalidState(format!(
                "need at least 2 vortices, got {}",
                self.positions.len()
            )));
        }
        if self.positions.len() != self.strengths.len() {
            return Err(VortexError::InvalidState(format!(
                "{} positions but {} strengths",
                self.positions.len(),
                self.strengths.len()
            )));
        }
        for (index, g) in self.strengths.iter().enumerate() {
            if *g == 0.0 || !g.is_finite() {
                return Err(VortexError::ZeroStrength { index });
            }
        }
        for z in &self.positions {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(VortexError::InvalidState("non-finite position".into()));
            }
        }
        for (i, j) in pairs(self.n()) {
            let sep = (self.positions[i] - self.positions[j]).norm();
            if sep == 0.0 {
                return Err(VortexError::SingularConfiguration { i, j, separation: sep });
            }
        }
        Ok(())
    }

    /// Total circulation `Γ = Σ Γ_α`.
    pub fn total_strength(&self) -> f64 {
        self.strengths.iter().sum()
    }

    /// Squared pairwise distances `b_αβ = |z_α − z_β|²` in lexicographic pair
    /// order.
    pub fn squared_distances(&self) -> Vec<f64> {
        pairs(self.n())
            .map(|(i, j)| (self.positions[i] - self.positions[j]).norm_sqr())
            .collect()
    }

    /// Smallest pairwise distance (not squared).
    pub fn min_pair_distance(&self) -> f64 {
        pairs(self.n())
            .map(|(i, j)| (self.positions[i] - self.positions[j]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance of any vortex from the origin.
    pub fn max_radius(&self) -> f64 {
        self.positions.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Evaluates every conserved quantity at this state.
    ///
    /// `M` is computed both as the pair sum `Σ Γ_α Γ_β b_αβ` and, when the
    /// total strength is nonzero, as `Γ I − |Z|²`; both values are stored so
    /// callers can check their mutual consistency.
    pub fn invariants(&self) -> Result<InvariantSet> {
        self.validate()?;
        let b = self.squared_distances();

        let mut energy = 0.0;
        let mut m_pair_sum = 0.0;
        for (k, (i, j)) in pairs(self.n()).enumerate() {
            let gg = self.strengths[i] * self.strengths[j];
            energy -= gg * b[k].ln();
            m_pair_sum += gg * b[k];
        }
        energy /= 4.0 * std::f64::consts::PI;

        let mut moment = Complex64::new(0.0, 0.0);
        let mut angular_impulse = 0.0;
        for (z, g) in self.positions.iter().zip(&self.strengths) {
            moment += g * z;
            angular_impulse += g * z.norm_sqr();
        }

        let gamma = self.total_strength();
        let m_from_moments =
            (gamma != 0.0).then(|| gamma * angular_impulse - moment.norm_sqr());

        Ok(InvariantSet {
            energy,
            moment,
            angular_impulse,
            m_pair_sum,
            m_from_moments,
            total_strength: gamma,
            virial: virial(&self.strengths)?,
            kinematic_virial: self.kinematic_virial()?,
        })
    }

    /// The kinematic sum `Σ Γ_α (x_α ẏ_α − y_α ẋ_α)` with velocities taken
    /// from the equations of motion. Identically equal to `virial/(2π)`.
    pub fn kinematic_virial(&self) -> Result<f64> {
        let velocities = crate::dynamics::velocity_field(self)?;
        Ok(self
            .positions
            .iter()
            .zip(&velocities)
            .zip(&self.strengths)
            .map(|((z, v), g)| g * (z.conj() * v).im)
            .sum())
    }
}

/// The conserved quantities of a single state, evaluated exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantSet {
    /// Interaction energy H.
    pub energy: f64,
    /// Moment of vorticity Z.
    pub moment: Complex64,
    /// Angular impulse I.
    pub angular_impulse: f64,
    /// M as the pair sum Σ Γ_α Γ_β b_αβ (the canonical value).
    pub m_pair_sum: f64,
    /// M as Γ I − |Z|²; `None` when Γ = 0 makes the identity unavailable.
    pub m_from_moments: Option<f64>,
    /// Total circulation Γ.
    pub total_strength: f64,
    /// Virial V = Σ_{α<β} Γ_α Γ_β, a function of the strengths alone.
    pub virial: f64,
    /// Kinematic cross-check Σ Γ_α z_α × ż_α = V/(2π).
    pub kinematic_virial: f64,
}

/// Virial `V = Σ_{α<β} Γ_α Γ_β` of a strength vector.
pub fn virial(strengths: &[f64]) -> Result<f64> {
    for (index, g) in strengths.iter().enumerate() {
        if *g == 0.0 {
            return Err(VortexError::ZeroStrength { index });
        }
    }
    Ok(pairs(strengths.len())
        .map(|(i, j)| strengths[i] * strengths[j])
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn unit_square() -> VortexState {
        VortexState::new(
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 1.0),
                Complex64::new(0.0, 1.0),
            ],
            vec![1.0; 4],
        )
        .unwrap()
    }

    #[test]
    fn pair_indexing_is_lexicographic() {
        let order: Vec<_> = pairs(4).collect();
        assert_eq!(order, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(pair_count(4), 6);
        for (k, (i, j)) in pairs(4).enumerate() {
            assert_eq!(pair_index(4, i, j), k);
        }
        assert_eq!(pair_count(3), 3);
        assert_eq!(pair_index(3, 1, 2), 2);
    }

    #[test]
    fn unit_square_invariants() {
        let inv = unit_square().invariants().unwrap();
        assert_abs_diff_eq!(inv.angular_impulse, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(inv.moment.re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(inv.moment.im, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(inv.m_pair_sum, 8.0, epsilon = 1e-13);
        assert_abs_diff_eq!(inv.m_from_moments.unwrap(), 8.0, epsilon = 1e-13);
        assert_relative_eq!(inv.energy, -(2.0f64.ln()) / (2.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn virial_depends_only_on_strengths() {
        assert_eq!(virial(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 6.0);
        assert_eq!(virial(&[1.0, -1.0]).unwrap(), -1.0);
        assert_eq!(virial(&[1.0, -1.0, 1.0, -1.0]).unwrap(), -2.0);
        assert_abs_diff_eq!(virial(&[2.0, 3.0, -1.0, 0.5]).unwrap(), 3.0, epsilon = 1e-14);
        assert!(virial(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn kinematic_virial_of_corotating_pair() {
        let state = VortexState::new(
            vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_relative_eq!(
            state.kinematic_virial().unwrap(),
            1.0 / (2.0 * PI),
            max_relative = 1e-14
        );
    }

    #[test]
    fn kinematic_virial_of_dipole() {
        let state = VortexState::new(
            vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![1.0, -1.0],
        )
        .unwrap();
        assert_relative_eq!(
            state.kinematic_virial().unwrap(),
            -1.0 / (2.0 * PI),
            max_relative = 1e-14
        );
    }

    #[test]
    fn kinematic_virial_matches_pair_sum_virial() {
        let state = VortexState::new(
            vec![
                Complex64::new(0.3, -1.2),
                Complex64::new(1.7, 0.4),
                Complex64::new(-0.9, 0.8),
                Complex64::new(0.1, 2.1),
            ],
            vec![1.3, -0.7, 2.1, 0.4],
        )
        .unwrap();
        let inv = state.invariants().unwrap();
        assert_relative_eq!(
            inv.kinematic_virial * 2.0 * PI,
            inv.virial,
            max_relative = 1e-12
        );
    }

    #[test]
    fn m_identity_holds_for_nonzero_total_strength() {
        let state = VortexState::new(
            vec![
                Complex64::new(0.5, 0.5),
                Complex64::new(-1.1, 0.2),
                Complex64::new(0.4, -1.6),
            ],
            vec![2.0, -0.5, 1.1],
        )
        .unwrap();
        let inv = state.invariants().unwrap();
        let m2 = inv.m_from_moments.unwrap();
        assert!((inv.m_pair_sum - m2).abs() <= 1e-12 * (1.0 + inv.m_pair_sum.abs()));
    }

    #[test]
    fn zero_total_strength_disables_moment_identity() {
        let state = VortexState::new(
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![1.0, -1.0],
        )
        .unwrap();
        let inv = state.invariants().unwrap();
        assert_eq!(inv.total_strength, 0.0);
        assert!(inv.m_from_moments.is_none());
    }

    #[test]
    fn invariants_is_bitwise_deterministic() {
        let state = unit_square();
        let a = state.invariants().unwrap();
        let b = state.invariants().unwrap();
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        assert_eq!(a.m_pair_sum.to_bits(), b.m_pair_sum.to_bits());
        assert_eq!(a.kinematic_virial.to_bits(), b.kinematic_virial.to_bits());
    }

    #[test]
    fn coincident_vortices_are_rejected() {
        let err = VortexState::new(
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![1.0, 1.0],
        )
        .unwrap_err();
        assert!(matches!(err, VortexError::SingularConfiguration { i: 0, j: 1, .. }));
    }
}
