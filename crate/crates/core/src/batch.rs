//! Data-parallel helpers for ensembles of independent runs.
//!
//! Every computation in this crate is pure, so ensembles (many initial
//! states, parameter grids) are embarrassingly parallel. With the `parallel`
//! feature (on by default) [`map_collect`] fans work out over the rayon
//! thread pool; without it the same call runs sequentially. Both paths
//! preserve input order, so results are deterministic either way. The
//! `_serial` variants always run on the calling thread and exist so the
//! benchmark suite can compare the two execution modes directly.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::dynamics::{self, IntegratorConfig, Trajectory};
use crate::state::VortexState;
use crate::Result;

/// Applies `f` to every item, in parallel when the `parallel` feature is on.
/// Output order matches input order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Applies `f` to every item sequentially (the `parallel` feature is off).
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Sequential twin of [`map_collect`], kept for benchmarking comparisons.
pub fn map_collect_serial<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Integrates every state to `t_end`, fanning runs out across threads when
/// the `parallel` feature is on. Per-run failures stay in their slot.
pub fn integrate_ensemble(
    states: &[VortexState],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Vec<Result<Trajectory>> {
    map_collect(states, |s| dynamics::integrate(s, t_end, cfg))
}

/// Sequential twin of [`integrate_ensemble`].
pub fn integrate_ensemble_serial(
    states: &[VortexState],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Vec<Result<Trajectory>> {
    map_collect_serial(states, |s| dynamics::integrate(s, t_end, cfg))
}
