//! Shape space of squared pairwise distances.
//!
//! The squared distances `b_ij = |z_i − z_j|²` factor into a scale and a
//! shape, `b_ij = ρ β_ij` with `ρ = Σ b_ij` and `Σ β_ij = 1`; `β` encodes the
//! similarity class of the configuration, `ρ` its size. Along the vortex flow
//! the squared distances obey
//!
//! ```text
//! db_ij/dt = (2/π) Σ_{k≠i,j} Γ_k A_ikj (1/b_ik − 1/b_kj)
//! ```
//!
//! where `A_ikj = Im(conj(z_i − z_k)(z_k − z_j))/2` is the oriented area of
//! triangle (i, k, j). The mutual term of the pair drops out, so only third
//! vortices move a distance. The constant 2/π follows from differentiating
//! `b_ij` along the equations of motion; [`sqdist_rhs`] is validated against
//! a finite-difference oracle on integrated trajectories rather than taken
//! on faith.
//!
//! Energy exponential convention (verified algebraically and by test): with
//! `H = −(1/4π) Σ Γ_iΓ_j ln b_ij`, the exponential `h := exp(−4πH)` satisfies
//!
//! ```text
//! h = Π b_ij^{Γ_iΓ_j} = ρ^V Π β_ij^{Γ_iΓ_j},     V = Σ_{i<j} Γ_iΓ_j,
//! ```
//!
//! so `h/ρ^V = Π β^{ΓΓ}` links the conserved energy to the shape alone.
//!
//! Oriented areas are always computed from Cartesian positions, never
//! reconstructed from `b` (distances do not determine orientation), and the
//! shape dynamics is validated against the Cartesian flow instead of being
//! integrated standalone.

use nalgebra::Matrix5;
use serde::{Deserialize, Serialize};

use crate::error::VortexError;
use crate::state::{pair_index, pairs, VortexState};
use crate::Result;

/// A point of shape space: squared distances with their scale/shape split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapePoint {
    /// Squared distances in lexicographic pair order.
    pub b: Vec<f64>,
    /// Scale ρ = Σ b_ij.
    pub rho: f64,
    /// Normalized shape β = b/ρ, summing to one.
    pub beta: Vec<f64>,
}

impl ShapePoint {
    /// Splits a raw squared-distance vector into scale and shape.
    pub fn from_squared_distances(b: Vec<f64>) -> Result<Self> {
        let rho: f64 = b.iter().sum();
        if rho <= 0.0 {
            return Err(VortexError::UndefinedShape);
        }
        let beta = b.iter().map(|v| v / rho).collect();
        Ok(ShapePoint { b, rho, beta })
    }
}

/// Maps a state to its shape-space point.
pub fn to_shape(state: &VortexState) -> Result<ShapePoint> {
    state.validate()?;
    ShapePoint::from_squared_distances(state.squared_distances())
}

/// Time derivative of every squared distance along the vortex flow, in
/// lexicographic pair order.
pub fn sqdist_rhs(state: &VortexState) -> Result<Vec<f64>> {
    state.validate()?;
    let n = state.n();
    let z = &state.positions;
    let b = state.squared_distances();
    let mut rhs = vec![0.0; b.len()];
    for (idx, (i, j)) in pairs(n).enumerate() {
        let mut sum = 0.0;
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            let w_ik = z[i] - z[k];
            let w_kj = z[k] - z[j];
            let area = (w_ik.conj() * w_kj).im / 2.0;
            let b_ik = b[pair_index(n, i.min(k), i.max(k))];
            let b_kj = b[pair_index(n, k.min(j), k.max(j))];
            sum += state.strengths[k] * area * (1.0 / b_ik - 1.0 / b_kj);
        }
        rhs[idx] = 2.0 / std::f64::consts::PI * sum;
    }
    Ok(rhs)
}

/// Cayley-Menger determinant of a four-point squared-distance vector.
///
/// The bordered 5×5 determinant equals `288 V²` where `V` is the volume of
/// the tetrahedron with these edge lengths; it vanishes exactly when the four
/// points are coplanar, which for vortices in the plane is an identity.
pub fn cayley_menger(b: &[f64; 6]) -> f64 {
    let [b12, b13, b14, b23, b24, b34] = *b;
    Matrix5::new(
        0.0, 1.0, 1.0, 1.0, 1.0, //
        1.0, 0.0, b12, b13, b14, //
        1.0, b12, 0.0, b23, b24, //
        1.0, b13, b23, 0.0, b34, //
        1.0, b14, b24, b34, 0.0,
    )
    .determinant()
}

/// Result of the geometric validity test for a squared-distance vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeValidity {
    /// True when all cone inequalities and the planarity test pass.
    pub valid: bool,
    /// Per-triple residual `2(b_a b_b + b_a b_c + b_b b_c) − (b_a²+b_b²+b_c²)`,
    /// nonnegative for realizable triangles; triples in order
    /// (1,2,3), (1,2,4), (1,3,4), (2,3,4).
    pub cone_residuals: [f64; 4],
    /// The Cayley-Menger determinant of the input.
    pub cayley_menger: f64,
    /// Threshold `tol · (max b)⁴` used for the planarity test.
    pub planarity_threshold: f64,
}

/// Triples of vortex indices in a four-vortex system.
pub const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];

/// Checks that `b` is geometrically realizable by four coplanar points.
///
/// Each triple must satisfy the triangle-cone inequality
/// `b_ij² + b_jk² + b_ki² ≤ 2(b_ij b_jk + b_ij b_ki + b_jk b_ki)` up to
/// `−tol`, and the Cayley-Menger determinant must vanish within
/// `tol · (max b)⁴` (the determinant is homogeneous of degree four).
pub fn shape_valid(b: &[f64; 6], tol: f64) -> ShapeValidity {
    let mut cone_residuals = [0.0; 4];
    for (t, triple) in TRIPLES.iter().enumerate() {
        let [i, j, k] = *triple;
        let e1 = b[pair_index(4, i, j)];
        let e2 = b[pair_index(4, j, k)];
        let e3 = b[pair_index(4, i, k)];
        cone_residuals[t] = 2.0 * (e1 * e2 + e1 * e3 + e2 * e3) - (e1 * e1 + e2 * e2 + e3 * e3);
    }
    let cm = cayley_menger(b);
    let scale = b.iter().cloned().fold(0.0f64, f64::max);
    let planarity_threshold = tol * scale.powi(4);
    let valid = cone_residuals.iter().all(|r| *r >= -tol) && cm.abs() <= planarity_threshold;
    ShapeValidity { valid, cone_residuals, cayley_menger: cm, planarity_threshold }
}

/// Relative residual of the shape-energy identity
/// `−4πH = V ln ρ + Σ Γ_iΓ_j ln β_ij`, evaluated in log space.
///
/// The identity is algebraically exact; a nonzero residual only measures
/// rounding, and along integrated trajectories it certifies that energy,
/// scale, and shape are computed consistently with each other.
pub fn energy_relation_residual(state: &VortexState) -> Result<f64> {
    let inv = state.invariants()?;
    let shape = to_shape(state)?;
    let log_h = -4.0 * std::f64::consts::PI * inv.energy;
    let mut rhs = inv.virial * shape.rho.ln();
    for (k, (i, j)) in pairs(state.n()).enumerate() {
        rhs += state.strengths[i] * state.strengths[j] * shape.beta[k].ln();
    }
    Ok((log_h - rhs).abs() / log_h.abs().max(rhs.abs()).max(1.0))
}
