//! Classification of synthetic and integrated trajectories.
//!
//! The synthetic inputs exercise the tagging rules on curves with known
//! limits: a shrinking-scale collapse whose shape oscillates produces a
//! sequential total tag plus a shape-space sequential tag on the oscillating
//! pair, while noisy non-converging data must produce no tags at all.

use num_complex::Complex64;
use vortex_core::collisions::{beta12_virial_bound, classify, CollisionKind};
use vortex_core::dynamics::{integrate, IntegratorConfig, Termination, Trajectory};
use vortex_core::VortexState;

fn synthetic(states: Vec<VortexState>) -> Trajectory {
    Trajectory::from_states(states, Termination::TimeLimit).unwrap()
}

/// Total collapse with overall scale e^{-t} whose shape brings one
/// mixed-sign pair together only at periodic instants. The pair strengths
/// multiply to -2 while the summed pair-strength product V is +1, so the
/// shape-space sequential tag lands on a pair whose strength product opposes
/// the sign of V.
fn oscillating_collapse() -> (Trajectory, Vec<f64>) {
    let strengths = vec![2.0, -1.0, 1.0, 1.0];
    let states: Vec<VortexState> = (0..241)
        .map(|k| {
            let t = 0.05 * k as f64;
            let s = (-t).exp();
            let d = 0.25 * (1.0 + (2.0 * std::f64::consts::PI * t).sin()) + 0.3 * (-t).exp();
            VortexState::at_time(
                vec![
                    Complex64::new(s * d, 0.0),
                    Complex64::new(-s * d, 0.0),
                    Complex64::new(0.0, s),
                    Complex64::new(0.0, -s),
                ],
                strengths.clone(),
                t,
            )
            .unwrap()
        })
        .collect();
    (synthetic(states), strengths)
}

#[test]
fn sequential_collapse_carries_a_shape_space_pair_tag() {
    let (traj, strengths) = oscillating_collapse();
    let virial: f64 = vortex_core::state::virial(&strengths).unwrap();
    assert!(virial > 0.0);

    let report = classify(&traj, 1e-4).unwrap();

    let total = report
        .clusters
        .iter()
        .find(|c| c.members == vec![0, 1, 2, 3])
        .expect("total cluster tagged");
    assert_eq!(total.kind, CollisionKind::Sequential);

    let weak_pair = report
        .clusters
        .iter()
        .find(|c| c.members.len() == 2 && c.kind == CollisionKind::RelativeSequential)
        .expect("shape-space sequential pair tagged");
    assert_eq!(weak_pair.members, vec![0, 1]);
    let product = strengths[weak_pair.members[0]] * strengths[weak_pair.members[1]];
    assert!(product * virial < 0.0);
    assert!(!weak_pair.evidence.record_times.is_empty());
}

#[test]
fn oscillation_above_a_floor_gets_no_tags() {
    let states: Vec<VortexState> = (0..60)
        .map(|k| {
            let t = k as f64 * 0.1;
            let half_gap = 0.025 * (1.0 + 0.2 * (17.0 * t).sin());
            VortexState::at_time(
                vec![
                    Complex64::new(half_gap, 0.0),
                    Complex64::new(-half_gap, 0.0),
                    Complex64::new(2.0, 2.0),
                ],
                vec![1.0, -1.0, 0.5],
                t,
            )
            .unwrap()
        })
        .collect();
    let report = classify(&synthetic(states), 1e-1).unwrap();
    assert!(report.is_empty(), "tags: {:?}", report.clusters);
}

#[test]
fn periodic_rotation_gets_no_tags() {
    let state = VortexState::new(
        vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
        vec![1.0, 1.0],
    )
    .unwrap();
    let traj = integrate(&state, 20.0, &IntegratorConfig::default()).unwrap();
    let report = classify(&traj, 1e-2).unwrap();
    assert!(report.is_empty());
}

#[test]
fn bound_report_applies_along_an_integrated_zero_m_flow() {
    let state = VortexState::new(
        vec![
            Complex64::new(-0.5, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(0.0, -2.0),
        ],
        vec![1.0, -2.0, 0.5, 1.5],
    )
    .unwrap();
    assert!(state.invariants().unwrap().m_pair_sum.abs() < 1e-12);

    let traj = integrate(&state, 5.0, &IntegratorConfig::default()).unwrap();
    let report = beta12_virial_bound(&traj, (0, 1)).unwrap();
    assert!(report.applicable, "notes: {:?}", report.hypothesis_notes);
    let (lo, hi) = (report.r_min.unwrap(), report.r_max.unwrap());
    assert!(lo > 0.0 && hi.is_finite() && hi >= lo);
    assert!(report.ratio.unwrap() >= 1.0);
    assert!(report.scale_trend_consistent.is_some());
}

#[test]
fn bound_report_rejects_nonzero_m() {
    let state = VortexState::new(
        vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(0.0, -2.0),
        ],
        vec![1.0, -2.0, 0.5, 1.5],
    )
    .unwrap();
    let traj = integrate(&state, 2.0, &IntegratorConfig::default()).unwrap();
    let report = beta12_virial_bound(&traj, (0, 1)).unwrap();
    assert!(!report.applicable);
    assert!(report.hypothesis_notes.iter().any(|n| n.contains("not zero")));
}
