//! Pair-adapted coordinates for a system containing a tight binary.
//!
//! For a chosen pair (a, b) with Γ_a + Γ_b ≠ 0, the chart replaces the two
//! member positions by the separation q = z_b - z_a and the pair's center
//! of vorticity ζ = (Γ_a z_a + Γ_b z_b)/(Γ_a + Γ_b); the inverse is
//! z_a = ζ - (Γ_b/Γ_ab) q, z_b = ζ + (Γ_a/Γ_ab) q. In these coordinates the
//! field splits into a fast rotation of q and a slow three-body system
//! (ζ, spectators): at q = 0 the (ζ, spectators) equations are exactly a
//! three-vortex system with strengths (Γ_ab, Γ_c, Γ_d).
//!
//! Writing R_j^b = (z_b - z_j)/|z_b - z_j|² and R_j^a = (z_a - z_j)/|z_a - z_j|²
//! for each spectator j, the chart field is
//!
//! ```text
//! q̇ = (i/2π) [ Γ_ab q/|q|² + Σ_j Γ_j (R_j^b - R_j^a) ],
//! ζ̇ = (i/(2π Γ_ab)) Σ_j Γ_j (Γ_a R_j^a + Γ_b R_j^b),
//! ż_j = (i/2π) [ Γ_k (z_j - z_k)/|z_j - z_k|² - Γ_b R_j^b - Γ_a R_j^a ].
//! ```
//!
//! With w_j = ζ - z_j, the coupling splits exactly as
//!
//! ```text
//! R_j^b - R_j^a = [ (|w_j|² + (Γ_a Γ_b/Γ_ab²)|q|²) q
//!                 + (((Γ_b - Γ_a)/Γ_ab)|q|² - 2 w_j·q) w_j ] / D_j,
//! D_j = |w_j + (Γ_a/Γ_ab) q|² |w_j - (Γ_b/Γ_ab) q|²,
//! ```
//!
//! giving q̇ = (i/2π)[(Γ_ab/|q|² + f1) q + f2 w_2 + f3 w_3] with
//! f1 → Γ_2/|w_2|² + Γ_3/|w_3|² as q → 0 and f2, f3 = O(|q|). The total
//! energy factorizes in the same limit: exp(-4πH) of the full system
//! approaches exp(-4πH) of the collapsed three-vortex system times
//! |q|^{2 Γ_a Γ_b}.

use num_complex::Complex64;

use crate::dynamics::velocity_field;
use crate::error::VortexError;
use crate::state::VortexState;
use crate::Result;

/// A four-vortex state expressed in pair-adapted coordinates.
#[derive(Debug, Clone)]
pub struct ChartState {
    /// Original indices of the pair members (a, b), a < b.
    pub pair: (usize, usize),
    /// Original indices of the two spectators, ascending.
    pub spectators: (usize, usize),
    /// Separation z_b - z_a.
    pub q: Complex64,
    /// Center of vorticity of the pair.
    pub zeta: Complex64,
    /// Spectator positions (same order as `spectators`).
    pub z_spec: [Complex64; 2],
    /// All four strengths in the original order.
    pub strengths: [f64; 4],
}

impl ChartState {
    /// Γ_a + Γ_b.
    pub fn pair_strength(&self) -> f64 {
        self.strengths[self.pair.0] + self.strengths[self.pair.1]
    }

    /// Strengths of the two pair members (Γ_a, Γ_b).
    pub fn member_strengths(&self) -> (f64, f64) {
        (self.strengths[self.pair.0], self.strengths[self.pair.1])
    }

    /// Strengths of the two spectators.
    pub fn spectator_strengths(&self) -> (f64, f64) {
        (self.strengths[self.spectators.0], self.strengths[self.spectators.1])
    }

    /// w_j = ζ - z_j for the two spectators.
    pub fn w(&self) -> [Complex64; 2] {
        [self.zeta - self.z_spec[0], self.zeta - self.z_spec[1]]
    }

    /// Pair member positions (z_a, z_b).
    pub fn member_positions(&self) -> (Complex64, Complex64) {
        let g = self.pair_strength();
        let (ga, gb) = self.member_strengths();
        (self.zeta - (gb / g) * self.q, self.zeta + (ga / g) * self.q)
    }

    /// The three-vortex system obtained by collapsing the binary to its
    /// center: positions (ζ, spectators), strengths (Γ_ab, Γ_c, Γ_d).
    pub fn collapsed_system(&self) -> Result<VortexState> {
        let (gc, gd) = self.spectator_strengths();
        VortexState::new(
            vec![self.zeta, self.z_spec[0], self.z_spec[1]],
            vec![self.pair_strength(), gc, gd],
        )
    }
}

/// Expresses a four-vortex state in the chart adapted to `pair`.
pub fn to_binary_chart(state: &VortexState, pair: (usize, usize)) -> Result<ChartState> {
    if state.n() != 4 {
        return Err(VortexError::InvalidState(format!(
            "the pair chart needs 4 vortices, got {}",
            state.n()
        )));
    }
    let (a, b) = (pair.0.min(pair.1), pair.0.max(pair.1));
    if a == b || b >= 4 {
        return Err(VortexError::InvalidState(format!("invalid pair ({}, {})", pair.0, pair.1)));
    }
    let mut strengths = [0.0; 4];
    strengths.copy_from_slice(&state.strengths);
    let g = strengths[a] + strengths[b];
    if g == 0.0 {
        return Err(VortexError::ZeroTotalStrength {
            context: "pair chart: the pair's center of vorticity is undefined".into(),
        });
    }
    let spectators: Vec<usize> = (0..4).filter(|k| *k != a && *k != b).collect();
    Ok(ChartState {
        pair: (a, b),
        spectators: (spectators[0], spectators[1]),
        q: state.positions[b] - state.positions[a],
        zeta: (strengths[a] * state.positions[a] + strengths[b] * state.positions[b]) / g,
        z_spec: [state.positions[spectators[0]], state.positions[spectators[1]]],
        strengths,
    })
}

/// Rebuilds the Cartesian state from chart coordinates.
pub fn from_binary_chart(chart: &ChartState) -> Result<VortexState> {
    let (za, zb) = chart.member_positions();
    let mut positions = [Complex64::new(0.0, 0.0); 4];
    positions[chart.pair.0] = za;
    positions[chart.pair.1] = zb;
    positions[chart.spectators.0] = chart.z_spec[0];
    positions[chart.spectators.1] = chart.z_spec[1];
    VortexState::new(positions.to_vec(), chart.strengths.to_vec())
}

/// Time derivatives of the chart coordinates (q̇, ζ̇, ż_c, ż_d).
#[derive(Debug, Clone, Copy)]
pub struct ChartVelocity {
    pub q_dot: Complex64,
    pub zeta_dot: Complex64,
    pub spec_dot: [Complex64; 2],
}

fn unit_pole(delta: Complex64) -> Complex64 {
    delta / delta.norm_sqr()
}

/// Evaluates the chart vector field directly from its pair-adapted form.
pub fn binary_vector_field(chart: &ChartState) -> Result<ChartVelocity> {
    let (za, zb) = chart.member_positions();
    let g = chart.pair_strength();
    let (ga, gb) = chart.member_strengths();
    let (gc, gd) = chart.spectator_strengths();
    let [zc, zd] = chart.z_spec;

    let r_b = [unit_pole(zb - zc), unit_pole(zb - zd)];
    let r_a = [unit_pole(za - zc), unit_pole(za - zd)];

    let rot = Complex64::new(0.0, 1.0) / (2.0 * std::f64::consts::PI);
    let q_dot = rot
        * (g * chart.q / chart.q.norm_sqr()
            + gc * (r_b[0] - r_a[0])
            + gd * (r_b[1] - r_a[1]));
    let zeta_dot = rot / g
        * (gc * (ga * r_a[0] + gb * r_b[0]) + gd * (ga * r_a[1] + gb * r_b[1]));
    let zc_dot = rot * (gd * unit_pole(zc - zd) - gb * r_b[0] - ga * r_a[0]);
    let zd_dot = rot * (gc * unit_pole(zd - zc) - gb * r_b[1] - ga * r_a[1]);

    Ok(ChartVelocity { q_dot, zeta_dot, spec_dot: [zc_dot, zd_dot] })
}

/// The chart velocity obtained by pushing the Cartesian field through the
/// (linear) chart map; the oracle for [`binary_vector_field`].
pub fn pushforward_velocity(state: &VortexState, pair: (usize, usize)) -> Result<ChartVelocity> {
    let chart = to_binary_chart(state, pair)?;
    let vel = velocity_field(state)?;
    let (a, b) = chart.pair;
    let (ga, gb) = chart.member_strengths();
    let g = chart.pair_strength();
    Ok(ChartVelocity {
        q_dot: vel[b] - vel[a],
        zeta_dot: (ga * vel[a] + gb * vel[b]) / g,
        spec_dot: [vel[chart.spectators.0], vel[chart.spectators.1]],
    })
}

/// The exact split of q̇ into a radial part and spectator-aligned parts.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationSplit {
    /// Γ_ab/|q|² + f1, the coefficient of q in q̇ (before i/2π).
    pub radial_coefficient: f64,
    /// The finite part f1 of the radial coefficient.
    pub f1: f64,
    /// Coefficients of w_2 and w_3.
    pub f: [f64; 2],
    /// The limit value of f1 at q = 0: Σ_j Γ_j/|w_j|².
    pub f1_at_zero: f64,
    pub w: [Complex64; 2],
}

/// Splits the coupling exactly: for each spectator j,
/// R_j^b - R_j^a = [(|w_j|² + λ|q|²) q + (μ|q|² - 2 w_j·q) w_j]/D_j with
/// λ = Γ_a Γ_b/Γ_ab², μ = (Γ_b - Γ_a)/Γ_ab, and
/// D_j = |w_j + (Γ_a/Γ_ab) q|² |w_j - (Γ_b/Γ_ab) q|².
pub fn perturbation_split(chart: &ChartState) -> Result<PerturbationSplit> {
    let g = chart.pair_strength();
    let (ga, gb) = chart.member_strengths();
    let (gc, gd) = chart.spectator_strengths();
    let w = chart.w();
    let q = chart.q;
    let qq = q.norm_sqr();
    let lambda = ga * gb / (g * g);
    let mu = (gb - ga) / g;

    let mut f1 = 0.0;
    let mut f = [0.0; 2];
    let mut f1_zero = 0.0;
    for (j, gj) in [(0usize, gc), (1usize, gd)] {
        let wj = w[j];
        let denom = (wj + (ga / g) * q).norm_sqr() * (wj - (gb / g) * q).norm_sqr();
        if denom == 0.0 {
            return Err(VortexError::SingularDenominator {
                expression: "spectator-member distance in the coupling split".into(),
            });
        }
        let dot = wj.re * q.re + wj.im * q.im;
        f1 += gj * (wj.norm_sqr() + lambda * qq) / denom;
        f[j] = gj * (mu * qq - 2.0 * dot) / denom;
        f1_zero += gj / wj.norm_sqr();
    }
    Ok(PerturbationSplit {
        radial_coefficient: g / qq + f1,
        f1,
        f,
        f1_at_zero: f1_zero,
        w,
    })
}

/// Reassembles q̇ from a split; identity oracle for [`perturbation_split`].
pub fn q_dot_from_split(chart: &ChartState, split: &PerturbationSplit) -> Complex64 {
    let rot = Complex64::new(0.0, 1.0) / (2.0 * std::f64::consts::PI);
    rot * (split.radial_coefficient * chart.q
        + split.f[0] * split.w[0]
        + split.f[1] * split.w[1])
}

/// The far-field approximation of the coupling, valid when
/// |q|²/|w_j|³ << 1: (i/2π) Σ_j (ν_j |q|² - 2 w_j·q)/|w_j|⁴ w_j with
/// ν_j = Γ_j (Γ_b - Γ_a)/Γ_ab. Returns the approximate coupling and the
/// two validity ratios |q|²/|w_j|³.
pub fn far_field_coupling(chart: &ChartState) -> Result<(Complex64, [f64; 2])> {
    let g = chart.pair_strength();
    let (ga, gb) = chart.member_strengths();
    let (gc, gd) = chart.spectator_strengths();
    let w = chart.w();
    let q = chart.q;
    let qq = q.norm_sqr();
    let mut coupling = Complex64::new(0.0, 0.0);
    let mut ratios = [0.0; 2];
    for (j, gj) in [(0usize, gc), (1usize, gd)] {
        let wj = w[j];
        let nu = gj * (gb - ga) / g;
        let dot = wj.re * q.re + wj.im * q.im;
        let w2 = wj.norm_sqr();
        coupling += (nu * qq - 2.0 * gj * dot) / (w2 * w2) * wj;
        ratios[j] = qq / (w2 * w2.sqrt());
    }
    let rot = Complex64::new(0.0, 1.0) / (2.0 * std::f64::consts::PI);
    Ok((rot * coupling, ratios))
}

/// (|ẇ_2| + |ẇ_3|)/|q̇|: how slow the collapsed system moves relative to
/// the binary rotation.
pub fn timescale_ratio(state: &VortexState, pair: (usize, usize)) -> Result<f64> {
    let chart = to_binary_chart(state, pair)?;
    let vel = binary_vector_field(&chart)?;
    let w_dot =
        [vel.zeta_dot - vel.spec_dot[0], vel.zeta_dot - vel.spec_dot[1]];
    Ok((w_dot[0].norm() + w_dot[1].norm()) / vel.q_dot.norm())
}

/// Whether the strengths satisfy the separation condition V > 2|Γ_a Γ_b|
/// under which the collapsed system slows down relative to the binary as
/// the binary shrinks.
pub fn timescale_condition(strengths: &[f64], pair: (usize, usize)) -> Result<bool> {
    let v = crate::state::virial(strengths)?;
    let (a, b) = pair;
    if a == b || a >= strengths.len() || b >= strengths.len() {
        return Err(VortexError::InvalidState(format!("invalid pair ({a}, {b})")));
    }
    Ok(v > 2.0 * (strengths[a] * strengths[b]).abs())
}

/// ln of the ratio between exp(-4πH) of the full system and the product
/// exp(-4πH_collapsed) · |q|^{2 Γ_a Γ_b}; tends to zero linearly in |q|.
pub fn energy_product_log_defect(state: &VortexState, pair: (usize, usize)) -> Result<f64> {
    let chart = to_binary_chart(state, pair)?;
    let collapsed = chart.collapsed_system()?;
    let (ga, gb) = chart.member_strengths();
    let h4 = -4.0 * std::f64::consts::PI * state.invariants()?.energy;
    let h3 = -4.0 * std::f64::consts::PI * collapsed.invariants()?.energy;
    Ok(h4 - h3 - ga * gb * chart.q.norm_sqr().ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_state() -> VortexState {
        VortexState::new(
            vec![
                Complex64::new(0.31, -0.12),
                Complex64::new(1.27, 0.84),
                Complex64::new(-0.95, 0.4),
                Complex64::new(0.35, -0.05),
            ],
            vec![0.7, -0.4, 1.1, 0.9],
        )
        .unwrap()
    }

    #[test]
    fn chart_round_trip_is_exact() {
        let state = sample_state();
        for pair in [(0, 3), (0, 1), (1, 2), (2, 3)] {
            let chart = to_binary_chart(&state, pair).unwrap();
            let back = from_binary_chart(&chart).unwrap();
            for (z0, z1) in state.positions.iter().zip(&back.positions) {
                assert_relative_eq!(z0.re, z1.re, epsilon = 1e-14);
                assert_relative_eq!(z0.im, z1.im, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn chart_field_matches_the_pushforward() {
        let state = sample_state();
        for pair in [(0, 3), (0, 1), (1, 3)] {
            let chart = to_binary_chart(&state, pair).unwrap();
            let direct = binary_vector_field(&chart).unwrap();
            let oracle = pushforward_velocity(&state, pair).unwrap();
            assert_relative_eq!(direct.q_dot.re, oracle.q_dot.re, max_relative = 1e-12);
            assert_relative_eq!(direct.q_dot.im, oracle.q_dot.im, max_relative = 1e-12);
            assert_relative_eq!(direct.zeta_dot.re, oracle.zeta_dot.re, max_relative = 1e-12);
            assert_relative_eq!(direct.zeta_dot.im, oracle.zeta_dot.im, max_relative = 1e-12);
            for j in 0..2 {
                assert_relative_eq!(
                    direct.spec_dot[j].re,
                    oracle.spec_dot[j].re,
                    max_relative = 1e-12
                );
                assert_relative_eq!(
                    direct.spec_dot[j].im,
                    oracle.spec_dot[j].im,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn zero_pair_strength_is_rejected() {
        let state = VortexState::new(
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.5),
                Complex64::new(1.0, 1.5),
            ],
            vec![1.0, 2.0, 0.5, -1.0],
        )
        .unwrap();
        assert!(matches!(
            to_binary_chart(&state, (0, 3)),
            Err(VortexError::ZeroTotalStrength { .. })
        ));
    }

    #[test]
    fn split_reassembles_q_dot() {
        let state = sample_state();
        let chart = to_binary_chart(&state, (0, 3)).unwrap();
        let split = perturbation_split(&chart).unwrap();
        let q_dot = q_dot_from_split(&chart, &split);
        let oracle = binary_vector_field(&chart).unwrap().q_dot;
        assert_relative_eq!(q_dot.re, oracle.re, max_relative = 1e-12);
        assert_relative_eq!(q_dot.im, oracle.im, max_relative = 1e-12);
    }

    #[test]
    fn coupling_coefficients_vanish_with_the_separation() {
        let base = sample_state();
        let mut previous = f64::INFINITY;
        for scale in [1e-2, 1e-3, 1e-4] {
            let mut positions = base.positions.clone();
            let g0 = base.strengths[0];
            let g3 = base.strengths[3];
            let center = (g0 * positions[0] + g3 * positions[3]) / (g0 + g3);
            let q = Complex64::new(scale, 0.4 * scale);
            positions[0] = center - (g3 / (g0 + g3)) * q;
            positions[3] = center + (g0 / (g0 + g3)) * q;
            let state = VortexState::new(positions, base.strengths.clone()).unwrap();
            let chart = to_binary_chart(&state, (0, 3)).unwrap();
            let split = perturbation_split(&chart).unwrap();
            let coupling = split.f[0].hypot(split.f[1]);
            assert!(coupling < previous * 0.5);
            previous = coupling;
            assert_relative_eq!(split.f1, split.f1_at_zero, max_relative = 2e-2);
        }
    }

    #[test]
    fn far_field_form_approximates_the_exact_coupling() {
        let base = sample_state();
        let mut positions = base.positions.clone();
        let g0 = base.strengths[0];
        let g3 = base.strengths[3];
        let center = (g0 * positions[0] + g3 * positions[3]) / (g0 + g3);
        let q = Complex64::new(1e-3, 4e-4);
        positions[0] = center - (g3 / (g0 + g3)) * q;
        positions[3] = center + (g0 / (g0 + g3)) * q;
        let state = VortexState::new(positions, base.strengths.clone()).unwrap();
        let chart = to_binary_chart(&state, (0, 3)).unwrap();

        let split = perturbation_split(&chart).unwrap();
        let rot = Complex64::new(0.0, 1.0) / (2.0 * std::f64::consts::PI);
        let exact = rot * (split.f[0] * split.w[0] + split.f[1] * split.w[1]);
        let (approx, ratios) = far_field_coupling(&chart).unwrap();
        assert!(ratios.iter().all(|r| *r < 1e-4));
        assert_relative_eq!(approx.re, exact.re, max_relative = 1e-2);
        assert_relative_eq!(approx.im, exact.im, max_relative = 1e-2);
    }

    #[test]
    fn collapsed_system_is_the_q_to_zero_limit_of_the_slow_block() {
        let base = sample_state();
        let mut positions = base.positions.clone();
        let g0 = base.strengths[0];
        let g3 = base.strengths[3];
        let center = (g0 * positions[0] + g3 * positions[3]) / (g0 + g3);
        let q = Complex64::new(1e-6, -3e-7);
        positions[0] = center - (g3 / (g0 + g3)) * q;
        positions[3] = center + (g0 / (g0 + g3)) * q;
        let state = VortexState::new(positions, base.strengths.clone()).unwrap();
        let chart = to_binary_chart(&state, (0, 3)).unwrap();

        let vel = binary_vector_field(&chart).unwrap();
        let collapsed = chart.collapsed_system().unwrap();
        let three = velocity_field(&collapsed).unwrap();
        assert_relative_eq!(vel.zeta_dot.re, three[0].re, max_relative = 1e-5);
        assert_relative_eq!(vel.zeta_dot.im, three[0].im, max_relative = 1e-5);
        assert_relative_eq!(vel.spec_dot[0].re, three[1].re, max_relative = 1e-5);
        assert_relative_eq!(vel.spec_dot[1].re, three[2].re, max_relative = 1e-5);
    }

    #[test]
    fn energy_defect_shrinks_linearly() {
        let base = sample_state();
        let mut defects = Vec::new();
        for scale in [1e-2, 1e-3, 1e-4] {
            let mut positions = base.positions.clone();
            let g0 = base.strengths[0];
            let g3 = base.strengths[3];
            let center = (g0 * positions[0] + g3 * positions[3]) / (g0 + g3);
            let q = Complex64::new(scale, 0.2 * scale);
            positions[0] = center - (g3 / (g0 + g3)) * q;
            positions[3] = center + (g0 / (g0 + g3)) * q;
            let state = VortexState::new(positions, base.strengths.clone()).unwrap();
            defects.push(energy_product_log_defect(&state, (0, 3)).unwrap().abs());
        }
        assert!(defects[1] < defects[0] * 0.2);
        assert!(defects[2] < defects[1] * 0.2);
    }

    #[test]
    fn timescale_separates_as_the_binary_shrinks() {
        let strengths = vec![0.3, 1.1, 1.0, 0.7];
        assert!(timescale_condition(&strengths, (0, 3)).unwrap());
        let mut ratios = Vec::new();
        for scale in [1e-1, 1e-2, 1e-3] {
            let center = Complex64::new(0.2, 0.1);
            let q = Complex64::new(scale, 0.0);
            let g0 = strengths[0];
            let g3 = strengths[3];
            let positions = vec![
                center - (g3 / (g0 + g3)) * q,
                Complex64::new(-1.3, 0.6),
                Complex64::new(0.9, -1.2),
                center + (g0 / (g0 + g3)) * q,
            ];
            let state = VortexState::new(positions, strengths.clone()).unwrap();
            ratios.push(timescale_ratio(&state, (0, 3)).unwrap());
        }
        assert!(ratios[1] < 0.2 * ratios[0]);
        assert!(ratios[2] < 0.2 * ratios[1]);
        assert!(ratios[2] < 5e-3);
    }
}
