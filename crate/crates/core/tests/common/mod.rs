//! Shared random-state generation for the integration-test suites.
//!
//! States are drawn from a fixed rejection scheme so every suite sees the
//! same kind of "generic" configuration: positions uniform in [−2, 2]²,
//! strengths with random sign and magnitude in [0.5, 2], minimum pairwise
//! distance at least 0.3 (keeps the energy and the stencil oracles well
//! conditioned), and all vortices within radius 3.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vortex_core::VortexState;

pub const MIN_PAIR_DISTANCE: f64 = 0.3;
pub const MAX_RADIUS: f64 = 3.0;

/// Deterministic RNG for a test, namespaced by a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One random `n`-vortex state drawn with the shared rejection rules.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> VortexState {
    loop {
        let positions: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let strengths: Vec<f64> = (0..n)
            .map(|_| {
                let magnitude = rng.gen_range(0.5..2.0);
                if rng.gen_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                }
            })
            .collect();
        let Ok(state) = VortexState::new(positions, strengths) else {
            continue;
        };
        if state.min_pair_distance() >= MIN_PAIR_DISTANCE && state.max_radius() <= MAX_RADIUS {
            return state;
        }
    }
}

/// A batch of random states from one seed.
pub fn random_states(seed: u64, n: usize, count: usize) -> Vec<VortexState> {
    let mut r = rng(seed);
    (0..count).map(|_| random_state(&mut r, n)).collect()
}
