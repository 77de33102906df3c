//! The four-stage coordinate chain that turns the Cartesian four-vortex
//! system with a tight (1,2)-binary into action-angle form.
//!
//! Stages, with the weight matrix carried along:
//!
//! 1. **Pair stage.** (z₁, z₂, z₃, z₄) → (ζ, z_c, z₃, z₄) where ζ = z₂ - z₁
//!    is the binary separation and z_c = (Γ₁z₁ + Γ₂z₂)/Γ₁₂ its center of
//!    vorticity. Weights diag(Γ₁, Γ₂, Γ₃, Γ₄) → diag(Γ₁Γ₂/Γ₁₂, Γ₁₂, Γ₃, Γ₄).
//! 2. **Discrete Fourier stage.** The slow triple (z_c, z₃, z₄) is mixed by
//!    the symmetric unitary 3-point Fourier matrix
//!    F = 3^{-1/2} [[1,1,1],[1,ω,ω̄],[1,ω̄,ω]], ω = e^{2πi/3}, giving modes
//!    (Q₀, Q₁, Q₂); ζ is untouched. This stage keeps a diagonal weight
//!    matrix exactly when Γ₁ + Γ₂ = Γ₃ = Γ₄, in which case the weights are
//!    unchanged.
//! 3. **Semi-polar stage.** Each complex coordinate X + iY becomes an
//!    action-angle pair j = (X² + Y²)/2, θ = atan2(Y, X). Weights unchanged.
//! 4. **Pairing stage.** The two mode pairs are recombined,
//!    i₁ = j₂ - j₁, i₂ = -(j₁ + j₂), φ₁ = (θ₂ - θ₁)/2, φ₂ = -(θ₁ + θ₂)/2,
//!    while (j, θ) and (j₀, θ₀) pass through as (i, φ) and (i₀, φ₀).
//!    Weights unchanged (the two recombined pairs carry equal weight Γ).
//!
//! Matrices for the linear stages are given in the substitution convention:
//! `old = S · new`, so a weight matrix J transforms as Sᵀ J S. Real 8-vectors
//! stack the four real parts before the four imaginary parts (or the four
//! actions before the four angles), and a complex matrix M = A + iB acts on
//! such a vector as the block matrix [[A, -B], [B, A]].
//!
//! In the final coordinates the binary separation is ε = √(2i), the slow
//! actions satisfy j₁ = -(i₁ + i₂)/2 ≥ 0 and j₂ = (i₁ - i₂)/2 ≥ 0, and the
//! combination S = √(i₂² - i₁²) = 2√(j₁ j₂) measures how far the mode
//! amplitudes are from balance.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::VortexError;
use crate::state::VortexState;
use crate::Result;

pub type Mat8 = SMatrix<f64, 8, 8>;
pub type Mat4C = SMatrix<Complex64, 4, 4>;
pub type Vec8 = SVector<f64, 8>;

/// Relative tolerance for [`strengths_condition`].
pub const CONDITION_REL_TOL: f64 = 1e-12;

/// The real 8×8 block form [[A, -B], [B, A]] of a complex 4×4 matrix A + iB.
pub fn real_form(m: &Mat4C) -> Mat8 {
    let mut out = Mat8::zeros();
    for r in 0..4 {
        for c in 0..4 {
            out[(r, c)] = m[(r, c)].re;
            out[(r, c + 4)] = -m[(r, c)].im;
            out[(r + 4, c)] = m[(r, c)].im;
            out[(r + 4, c + 4)] = m[(r, c)].re;
        }
    }
    out
}

/// The antisymmetric weight matrix [[0, diag(w)], [-diag(w), 0]].
pub fn weighted_form(weights: &[f64; 4]) -> Mat8 {
    let mut out = Mat8::zeros();
    for k in 0..4 {
        out[(k, k + 4)] = weights[k];
        out[(k + 4, k)] = -weights[k];
    }
    out
}

/// The weight matrix of the Cartesian coordinates.
pub fn strength_form(strengths: &[f64; 4]) -> Mat8 {
    weighted_form(strengths)
}

/// Weights after the pair stage: (Γ₁Γ₂/Γ₁₂, Γ₁₂, Γ₃, Γ₄).
pub fn pair_weights(strengths: &[f64; 4]) -> Result<[f64; 4]> {
    let g12 = strengths[0] + strengths[1];
    if g12 == 0.0 {
        return Err(VortexError::ZeroTotalStrength {
            context: "pair stage: Γ₁ + Γ₂ = 0 leaves the center of vorticity undefined".into(),
        });
    }
    Ok([strengths[0] * strengths[1] / g12, g12, strengths[2], strengths[3]])
}

/// Whether Γ₁ + Γ₂ = Γ₃ = Γ₄ up to a relative tolerance; the condition
/// under which the Fourier stage stays canonical.
pub fn strengths_condition(strengths: &[f64; 4]) -> bool {
    let g12 = strengths[0] + strengths[1];
    let scale = strengths.iter().map(|g| g.abs()).fold(g12.abs(), f64::max);
    (g12 - strengths[2]).abs() <= CONDITION_REL_TOL * scale
        && (g12 - strengths[3]).abs() <= CONDITION_REL_TOL * scale
}

/// Substitution matrix of the pair stage: (z₁..z₄) = S · (ζ, z_c, z₃, z₄),
/// i.e. z₁ = z_c - (Γ₂/Γ₁₂)ζ and z₂ = z_c + (Γ₁/Γ₁₂)ζ.
pub fn pair_substitution(strengths: &[f64; 4]) -> Result<Mat4C> {
    let g12 = strengths[0] + strengths[1];
    if g12 == 0.0 {
        return Err(VortexError::ZeroTotalStrength {
            context: "pair stage: Γ₁ + Γ₂ = 0 leaves the center of vorticity undefined".into(),
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let mut s = Mat4C::zeros();
    s[(0, 0)] = Complex64::new(-strengths[1] / g12, 0.0);
    s[(0, 1)] = one;
    s[(1, 0)] = Complex64::new(strengths[0] / g12, 0.0);
    s[(1, 1)] = one;
    s[(2, 2)] = one;
    s[(3, 3)] = one;
    Ok(s)
}

/// Forward matrix of the pair stage: (ζ, z_c, z₃, z₄) = T · (z₁..z₄).
pub fn pair_forward(strengths: &[f64; 4]) -> Result<Mat4C> {
    let g12 = strengths[0] + strengths[1];
    if g12 == 0.0 {
        return Err(VortexError::ZeroTotalStrength {
            context: "pair stage: Γ₁ + Γ₂ = 0 leaves the center of vorticity undefined".into(),
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let mut t = Mat4C::zeros();
    t[(0, 0)] = -one;
    t[(0, 1)] = one;
    t[(1, 0)] = Complex64::new(strengths[0] / g12, 0.0);
    t[(1, 1)] = Complex64::new(strengths[1] / g12, 0.0);
    t[(2, 2)] = one;
    t[(3, 3)] = one;
    Ok(t)
}

/// The symmetric unitary 3-point Fourier matrix with ω = e^{2πi/3}.
fn fourier3() -> SMatrix<Complex64, 3, 3> {
    let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let s = 1.0 / 3f64.sqrt();
    let one = Complex64::new(1.0, 0.0);
    SMatrix::<Complex64, 3, 3>::from_row_slice(&[
        one, one, one,
        one, omega, omega.conj(),
        one, omega.conj(), omega,
    ])
    .map(|z| z * s)
}

/// Forward matrix of the Fourier stage: (ζ, Q₀, Q₁, Q₂) = T · (ζ, z_c, z₃, z₄).
pub fn dft_forward() -> Mat4C {
    let f = fourier3();
    let mut t = Mat4C::zeros();
    t[(0, 0)] = Complex64::new(1.0, 0.0);
    for r in 0..3 {
        for c in 0..3 {
            t[(r + 1, c + 1)] = f[(r, c)];
        }
    }
    t
}

/// Substitution matrix of the Fourier stage (the conjugate of
/// [`dft_forward`], since the Fourier matrix is symmetric unitary).
pub fn dft_substitution() -> Mat4C {
    dft_forward().map(|z| z.conj())
}

/// Substitution matrix of the pairing stage: (j, θ) = T · (i, φ), acting on
/// action-angle 8-vectors (actions first). The action block maps
/// j₁ = -(i₁ + i₂)/2, j₂ = (i₁ - i₂)/2; the angle block maps
/// θ₁ = -φ₁ - φ₂, θ₂ = φ₁ - φ₂.
pub fn pairing_substitution() -> Mat8 {
    let mut t = Mat8::zeros();
    t[(0, 0)] = 1.0;
    t[(1, 1)] = 1.0;
    t[(2, 2)] = -0.5;
    t[(2, 3)] = -0.5;
    t[(3, 2)] = 0.5;
    t[(3, 3)] = -0.5;
    t[(4, 4)] = 1.0;
    t[(5, 5)] = 1.0;
    t[(6, 6)] = -1.0;
    t[(6, 7)] = -1.0;
    t[(7, 6)] = 1.0;
    t[(7, 7)] = -1.0;
    t
}

/// Forward matrix of the pairing stage: (i, φ) = T · (j, θ), with
/// i₁ = j₂ - j₁, i₂ = -(j₁ + j₂), φ₁ = (θ₂ - θ₁)/2, φ₂ = -(θ₁ + θ₂)/2.
pub fn pairing_forward() -> Mat8 {
    let mut t = Mat8::zeros();
    t[(0, 0)] = 1.0;
    t[(1, 1)] = 1.0;
    t[(2, 2)] = -1.0;
    t[(2, 3)] = 1.0;
    t[(3, 2)] = -1.0;
    t[(3, 3)] = -1.0;
    t[(4, 4)] = 1.0;
    t[(5, 5)] = 1.0;
    t[(6, 6)] = -0.5;
    t[(6, 7)] = 0.5;
    t[(7, 6)] = -0.5;
    t[(7, 7)] = -0.5;
    t
}

/// Sᵀ J S: the weight matrix after substituting old = S · new.
pub fn form_after(substitution: &Mat8, j: &Mat8) -> Mat8 {
    substitution.transpose() * j * substitution
}

/// How far a weight matrix is from the canonical shape
/// [[0, diag], [-diag, 0]]: the largest absolute entry outside that pattern.
pub fn canonical_defect(j: &Mat8) -> f64 {
    let mut defect: f64 = 0.0;
    for r in 0..8 {
        for c in 0..8 {
            let on_pattern = (c == r + 4) || (r == c + 4);
            if !on_pattern {
                defect = defect.max(j[(r, c)].abs());
            }
        }
    }
    for k in 0..4 {
        defect = defect.max((j[(k, k + 4)] + j[(k + 4, k)]).abs());
    }
    defect
}

/// The Fourier-stage weight coupling between modes m and n (0-indexed),
/// |Γ₁₂ + Γ₃ ω^{m-n} + Γ₄ ω^{2(m-n)}|/3; zero for all m ≠ n exactly when
/// Γ₁ + Γ₂ = Γ₃ = Γ₄.
pub fn dft_mode_coupling(strengths: &[f64; 4], m: usize, n: usize) -> f64 {
    let omega = Complex64::from_polar(
        1.0,
        2.0 * std::f64::consts::PI / 3.0 * ((m as f64) - (n as f64)),
    );
    let g12 = strengths[0] + strengths[1];
    (Complex64::new(g12, 0.0) + strengths[2] * omega + strengths[3] * omega * omega).norm() / 3.0
}

/// Whether the Fourier stage leaves the weight matrix canonical for these
/// strengths, judged from the transformed matrix itself.
pub fn dft_stage_canonical(strengths: &[f64; 4]) -> Result<bool> {
    let j1 = weighted_form(&pair_weights(strengths)?);
    let j2 = form_after(&real_form(&dft_substitution()), &j1);
    let scale = strengths.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    Ok(canonical_defect(&j2) <= 1e-12 * scale)
}

/// Semi-polar map on a stacked real 8-vector: (X, Y) blocks to (j, θ)
/// blocks with j = (X² + Y²)/2 and θ = atan2(Y, X) (zero at the origin).
pub fn semi_polar_forward(xy: &Vec8) -> Vec8 {
    let mut out = Vec8::zeros();
    for k in 0..4 {
        let (x, y) = (xy[k], xy[k + 4]);
        out[k] = 0.5 * (x * x + y * y);
        out[k + 4] = if x == 0.0 && y == 0.0 { 0.0 } else { y.atan2(x) };
    }
    out
}

/// Inverse semi-polar map; rejects negative actions.
pub fn semi_polar_inverse(jt: &Vec8) -> Result<Vec8> {
    let mut out = Vec8::zeros();
    for k in 0..4 {
        let (j, theta) = (jt[k], jt[k + 4]);
        if j < 0.0 {
            return Err(VortexError::DomainViolation {
                expression: format!("action {k} of the semi-polar map"),
                value: j,
            });
        }
        let r = (2.0 * j).sqrt();
        out[k] = r * theta.cos();
        out[k + 4] = r * theta.sin();
    }
    Ok(out)
}

/// Jacobian ∂(j, θ)/∂(X, Y) of the semi-polar map; singular where any
/// coordinate pair sits at its origin.
pub fn semi_polar_jacobian(xy: &Vec8) -> Result<Mat8> {
    let mut jac = Mat8::zeros();
    for k in 0..4 {
        let (x, y) = (xy[k], xy[k + 4]);
        let r2 = x * x + y * y;
        if r2 == 0.0 {
            return Err(VortexError::SingularDenominator {
                expression: format!("semi-polar Jacobian at zero amplitude in pair {k}"),
            });
        }
        jac[(k, k)] = x;
        jac[(k, k + 4)] = y;
        jac[(k + 4, k)] = -y / r2;
        jac[(k + 4, k + 4)] = x / r2;
    }
    Ok(jac)
}

/// The linear stages bundled, in both conventions, with the weight
/// matrices they produce.
#[derive(Debug, Clone)]
pub struct TransformChain {
    pub strengths: [f64; 4],
    /// Substitution matrices (old = S · new) for the two linear stages.
    pub pair_sub: Mat8,
    pub dft_sub: Mat8,
    pub pairing_sub: Mat8,
    /// Forward matrices (new = T · old) for the same stages.
    pub pair_fwd: Mat8,
    pub dft_fwd: Mat8,
    pub pairing_fwd: Mat8,
    /// Weight matrices before the chain and after the pair stage.
    pub j0: Mat8,
    pub j1: Mat8,
}

/// Builds the whole chain for a strength vector.
pub fn transform_chain(strengths: &[f64; 4]) -> Result<TransformChain> {
    Ok(TransformChain {
        strengths: *strengths,
        pair_sub: real_form(&pair_substitution(strengths)?),
        dft_sub: real_form(&dft_substitution()),
        pairing_sub: pairing_substitution(),
        pair_fwd: real_form(&pair_forward(strengths)?),
        dft_fwd: real_form(&dft_forward()),
        pairing_fwd: pairing_forward(),
        j0: strength_form(strengths),
        j1: weighted_form(&pair_weights(strengths)?),
    })
}

impl TransformChain {
    /// The weight matrix after the Fourier stage.
    pub fn j2(&self) -> Mat8 {
        form_after(&self.dft_sub, &self.j1)
    }

    /// The diagonal weights of the fully reduced coordinates; defined only
    /// under the strength condition.
    pub fn reduced_weights(&self) -> Result<[f64; 4]> {
        if !strengths_condition(&self.strengths) {
            return Err(VortexError::StrengthCondition(format!(
                "Γ₁+Γ₂ = {}, Γ₃ = {}, Γ₄ = {}",
                self.strengths[0] + self.strengths[1],
                self.strengths[2],
                self.strengths[3]
            )));
        }
        let g = self.strengths[2];
        Ok([self.strengths[0] * self.strengths[1] / g, g, g, g])
    }
}

/// Action-angle coordinates of the reduced system: actions (i, i₀, i₁, i₂)
/// and angles (φ, φ₀, φ₁, φ₂).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReducedCoords {
    pub i: [f64; 4],
    pub phi: [f64; 4],
}

impl ReducedCoords {
    /// Binary separation ε = √(2i).
    pub fn epsilon(&self) -> f64 {
        (2.0 * self.i[0]).sqrt()
    }

    /// The mode actions (j₁, j₂) = (-(i₁+i₂)/2, (i₁-i₂)/2).
    pub fn mode_actions(&self) -> (f64, f64) {
        (-(self.i[2] + self.i[3]) / 2.0, (self.i[2] - self.i[3]) / 2.0)
    }

    /// S = 2√(j₁ j₂) = √(i₂² - i₁²).
    pub fn s(&self) -> Result<f64> {
        let s2 = self.i[3] * self.i[3] - self.i[2] * self.i[2];
        if s2 < 0.0 {
            return Err(VortexError::DomainViolation {
                expression: "i₂² - i₁²".into(),
                value: s2,
            });
        }
        Ok(s2.sqrt())
    }

    /// Checks i > 0, i₀ ≥ 0, j₁ ≥ 0, j₂ ≥ 0.
    pub fn validate(&self) -> Result<()> {
        if self.i[0] <= 0.0 {
            return Err(VortexError::DomainViolation {
                expression: "binary action i".into(),
                value: self.i[0],
            });
        }
        if self.i[1] < 0.0 {
            return Err(VortexError::DomainViolation {
                expression: "centroid action i₀".into(),
                value: self.i[1],
            });
        }
        let (j1, j2) = self.mode_actions();
        if j1 < 0.0 {
            return Err(VortexError::DomainViolation {
                expression: "mode action j₁ = -(i₁+i₂)/2".into(),
                value: j1,
            });
        }
        if j2 < 0.0 {
            return Err(VortexError::DomainViolation {
                expression: "mode action j₂ = (i₁-i₂)/2".into(),
                value: j2,
            });
        }
        Ok(())
    }
}

fn complex4_to_vec8(z: &[Complex64; 4]) -> Vec8 {
    Vec8::from_iterator(z.iter().map(|c| c.re).chain(z.iter().map(|c| c.im)))
}

fn vec8_to_complex4(v: &Vec8) -> [Complex64; 4] {
    [
        Complex64::new(v[0], v[4]),
        Complex64::new(v[1], v[5]),
        Complex64::new(v[2], v[6]),
        Complex64::new(v[3], v[7]),
    ]
}

/// Maps the (1,2)-pair chart (separation, center, z₃, z₄) to reduced
/// action-angle coordinates.
pub fn chart_to_reduced(chart: &super::chart::ChartState) -> Result<ReducedCoords> {
    if chart.pair != (0, 1) {
        return Err(VortexError::InvalidState(format!(
            "the reduction chain is built on the (1,2) pair, got ({}, {})",
            chart.pair.0 + 1,
            chart.pair.1 + 1
        )));
    }
    let fwd = dft_forward();
    let mixed_in = [chart.q, chart.zeta, chart.z_spec[0], chart.z_spec[1]];
    let mut mixed = [Complex64::new(0.0, 0.0); 4];
    for r in 0..4 {
        for c in 0..4 {
            mixed[r] += fwd[(r, c)] * mixed_in[c];
        }
    }
    let jt = semi_polar_forward(&complex4_to_vec8(&mixed));
    let iphi = pairing_forward() * jt;
    Ok(ReducedCoords {
        i: [iphi[0], iphi[1], iphi[2], iphi[3]],
        phi: [iphi[4], iphi[5], iphi[6], iphi[7]],
    })
}

/// Rebuilds the (1,2)-pair chart from reduced coordinates.
pub fn reduced_to_chart(
    coords: &ReducedCoords,
    strengths: &[f64; 4],
) -> Result<super::chart::ChartState> {
    coords.validate()?;
    let iphi = Vec8::from_iterator(coords.i.iter().chain(coords.phi.iter()).copied());
    let jt = pairing_substitution() * iphi;
    let xy = semi_polar_inverse(&jt)?;
    let modes = vec8_to_complex4(&xy);
    let sub = dft_substitution();
    let mut unmixed = [Complex64::new(0.0, 0.0); 4];
    for r in 0..4 {
        for c in 0..4 {
            unmixed[r] += sub[(r, c)] * modes[c];
        }
    }
    let g12 = strengths[0] + strengths[1];
    if g12 == 0.0 {
        return Err(VortexError::ZeroTotalStrength {
            context: "pair stage: Γ₁ + Γ₂ = 0 leaves the center of vorticity undefined".into(),
        });
    }
    Ok(super::chart::ChartState {
        pair: (0, 1),
        spectators: (2, 3),
        q: unmixed[0],
        zeta: unmixed[1],
        z_spec: [unmixed[2], unmixed[3]],
        strengths: *strengths,
    })
}

/// Maps a Cartesian four-vortex state all the way to reduced coordinates.
pub fn to_reduced(state: &VortexState) -> Result<ReducedCoords> {
    chart_to_reduced(&super::chart::to_binary_chart(state, (0, 1))?)
}

/// Rebuilds the Cartesian state from reduced coordinates.
pub fn from_reduced(coords: &ReducedCoords, strengths: &[f64; 4]) -> Result<VortexState> {
    super::chart::from_binary_chart(&reduced_to_chart(coords, strengths)?)
}

/// Jacobian ∂(reduced)/∂(Cartesian) of the full composition, from the
/// analytic stage Jacobians.
pub fn full_forward_jacobian(state: &VortexState) -> Result<Mat8> {
    let mut strengths = [0.0; 4];
    if state.n() != 4 {
        return Err(VortexError::InvalidState(format!(
            "the reduction chain needs 4 vortices, got {}",
            state.n()
        )));
    }
    strengths.copy_from_slice(&state.strengths);
    let chain = transform_chain(&strengths)?;
    let linear = chain.dft_fwd * chain.pair_fwd;
    let mut z = [Complex64::new(0.0, 0.0); 4];
    for (zk, p) in z.iter_mut().zip(&state.positions) {
        *zk = *p;
    }
    let xy = linear * complex4_to_vec8(&z);
    let polar = semi_polar_jacobian(&xy)?;
    Ok(chain.pairing_fwd * polar * linear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn max_abs_diff(a: &Mat8, b: &Mat8) -> f64 {
        (a - b).iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    #[test]
    fn pair_stage_weights_match_the_closed_form() {
        let strengths = [0.6, -1.4, 2.0, 0.9];
        let chain = transform_chain(&strengths).unwrap();
        let j1 = form_after(&chain.pair_sub, &chain.j0);
        assert!(max_abs_diff(&j1, &chain.j1) < 1e-14);
    }

    #[test]
    fn pair_stage_weights_frozen_example() {
        let weights = pair_weights(&[1.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(weights, [0.5, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn substitution_and_forward_matrices_are_inverse() {
        let strengths = [0.6, -1.4, 2.0, 0.9];
        let chain = transform_chain(&strengths).unwrap();
        assert!(max_abs_diff(&(chain.pair_sub * chain.pair_fwd), &Mat8::identity()) < 1e-14);
        assert!(max_abs_diff(&(chain.dft_sub * chain.dft_fwd), &Mat8::identity()) < 1e-14);
        assert!(
            max_abs_diff(&(chain.pairing_sub * chain.pairing_fwd), &Mat8::identity()) < 1e-14
        );
    }

    #[test]
    fn fourier_stage_is_canonical_exactly_under_the_condition() {
        assert!(dft_stage_canonical(&[0.3, 0.7, 1.0, 1.0]).unwrap());
        assert!(dft_stage_canonical(&[-0.5, 2.5, 2.0, 2.0]).unwrap());
        assert!(!dft_stage_canonical(&[0.3, 0.7, 1.0, 1.1]).unwrap());
        assert!(!dft_stage_canonical(&[1.0, 1.0, 2.0, 1.0]).unwrap());
    }

    #[test]
    fn mode_coupling_formula_matches_the_transformed_matrix() {
        let strengths = [0.4, 0.8, 1.7, 0.9];
        let chain = transform_chain(&strengths).unwrap();
        let j2 = chain.j2();
        for m in 0..3 {
            for n in 0..3 {
                if m == n {
                    continue;
                }
                let predicted = dft_mode_coupling(&strengths, m, n);
                let re = j2[(1 + m, 1 + n + 4)];
                let im = j2[(1 + m + 4, 1 + n + 4)];
                assert_relative_eq!(re.hypot(im), predicted, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn fourier_stage_preserves_weights_under_the_condition() {
        let strengths = [0.3, 0.7, 1.0, 1.0];
        let chain = transform_chain(&strengths).unwrap();
        assert!(max_abs_diff(&chain.j2(), &chain.j1) < 1e-14);
        let reduced = weighted_form(&chain.reduced_weights().unwrap());
        assert!(max_abs_diff(&chain.j2(), &reduced) < 1e-14);
    }

    #[test]
    fn pairing_stage_preserves_weights_under_the_condition() {
        let strengths = [0.3, 0.7, 1.0, 1.0];
        let chain = transform_chain(&strengths).unwrap();
        let j4 = form_after(&chain.pairing_sub, &chain.j2());
        assert!(max_abs_diff(&j4, &chain.j2()) < 1e-14);
    }

    #[test]
    fn semi_polar_stage_is_symplectic_for_any_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let weights = [0.21875, 1.0, 1.0, 1.0];
        let w = weighted_form(&weights);
        for _ in 0..50 {
            let xy = Vec8::from_fn(|_, _| rng.gen_range(-2.0..2.0f64));
            let jac = semi_polar_jacobian(&xy).unwrap();
            let pulled = jac.transpose() * w * jac;
            assert!(max_abs_diff(&pulled, &w) < 1e-12);
        }
    }

    #[test]
    fn semi_polar_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let xy = Vec8::from_fn(|_, _| rng.gen_range(-2.0..2.0f64));
            let jt = semi_polar_forward(&xy);
            let back = semi_polar_inverse(&jt).unwrap();
            for k in 0..8 {
                assert_relative_eq!(back[k], xy[k], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn negative_action_is_rejected() {
        let mut jt = Vec8::zeros();
        jt[2] = -0.25;
        assert!(matches!(
            semi_polar_inverse(&jt),
            Err(VortexError::DomainViolation { .. })
        ));
    }

    #[test]
    fn reduced_round_trip_recovers_the_state() {
        let strengths = [0.3, 0.7, 1.0, 1.0];
        let state = VortexState::new(
            vec![
                Complex64::new(0.11, -0.02),
                Complex64::new(0.13, 0.01),
                Complex64::new(-0.9, 0.75),
                Complex64::new(0.6, -1.1),
            ],
            strengths.to_vec(),
        )
        .unwrap();
        let coords = to_reduced(&state).unwrap();
        coords.validate().unwrap();
        let back = from_reduced(&coords, &strengths).unwrap();
        for (z0, z1) in state.positions.iter().zip(&back.positions) {
            assert_relative_eq!(z0.re, z1.re, epsilon = 1e-12);
            assert_relative_eq!(z0.im, z1.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn epsilon_is_the_binary_separation() {
        let strengths = [1.2, 0.8, 2.0, 2.0];
        let state = VortexState::new(
            vec![
                Complex64::new(0.2, 0.3),
                Complex64::new(0.2 + 3e-3, 0.3 - 4e-3),
                Complex64::new(-1.0, 0.5),
                Complex64::new(0.8, -0.9),
            ],
            strengths.to_vec(),
        )
        .unwrap();
        let coords = to_reduced(&state).unwrap();
        let sep = (state.positions[1] - state.positions[0]).norm();
        assert_relative_eq!(coords.epsilon(), sep, max_relative = 1e-12);
    }

    #[test]
    fn full_jacobian_pulls_the_reduced_weights_back_to_the_strengths() {
        let strengths = [0.3, 0.7, 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let chain = transform_chain(&strengths).unwrap();
        let reduced = weighted_form(&chain.reduced_weights().unwrap());
        for _ in 0..20 {
            let state = VortexState::new(
                vec![
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                ],
                strengths.to_vec(),
            )
            .unwrap();
            let jac = match full_forward_jacobian(&state) {
                Ok(j) => j,
                Err(_) => continue,
            };
            let pulled = jac.transpose() * reduced * jac;
            assert!(max_abs_diff(&pulled, &chain.j0) < 1e-9);
        }
    }

    #[test]
    fn angle_difference_reproduces_the_mode_phase_gap() {
        let strengths = [0.3, 0.7, 1.0, 1.0];
        let state = VortexState::new(
            vec![
                Complex64::new(0.11, -0.02),
                Complex64::new(0.13, 0.01),
                Complex64::new(-0.9, 0.75),
                Complex64::new(0.6, -1.1),
            ],
            strengths.to_vec(),
        )
        .unwrap();
        let chart = super::super::chart::to_binary_chart(&state, (0, 1)).unwrap();
        let fwd = dft_forward();
        let input = [chart.q, chart.zeta, chart.z_spec[0], chart.z_spec[1]];
        let mut modes = [Complex64::new(0.0, 0.0); 4];
        for r in 0..4 {
            for c in 0..4 {
                modes[r] += fwd[(r, c)] * input[c];
            }
        }
        let coords = to_reduced(&state).unwrap();
        let gap = modes[2].arg() - modes[3].arg();
        let mut diff = -2.0 * coords.phi[2] - gap;
        while diff > std::f64::consts::PI {
            diff -= 2.0 * std::f64::consts::PI;
        }
        while diff < -std::f64::consts::PI {
            diff += 2.0 * std::f64::consts::PI;
        }
        assert!(diff.abs() < 1e-12);
    }
}
