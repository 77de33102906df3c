//! Numerical laboratory for the planar point-vortex problem.
//!
//! A system of N point vortices with circulation strengths `Γ_α` at positions
//! `z_α = x_α + i y_α` evolves under
//!
//! ```text
//! dz_α/dt = (i/2π) Σ_{β≠α} Γ_β (z_α − z_β) / |z_α − z_β|²
//! ```
//!
//! This crate provides the building blocks for studying that system with an
//! emphasis on N ≤ 4 and on collision (collapse) phenomena:
//!
//! - [`state`]: phase-space states and exact evaluation of the conserved
//!   quantities H, Z, I, M and the strength-only virial V.
//! - [`ode`]: an embedded Dormand-Prince 5(4) integrator with dense output,
//!   step-size control, and event localization by bisection.
//! - [`dynamics`]: the Cartesian vector field, adaptive trajectory
//!   integration with collision-event detection, and recentering.
//! - [`sqdist`]: the shape space of squared pairwise distances `b_ij`, its
//!   scale/shape split `b = ρ β`, the induced dynamics `ḃ`, and geometric
//!   validity tests (triangle-cone inequalities, Cayley-Menger determinant).
//! - [`collisions`]: detection and classification of collision evolutions
//!   (total, partial, sequential, relative), necessary-condition tables for
//!   bounded ternary and double-binary collapse, the dipole bound
//!   `β_ij^{|Γ_iΓ_j|}/ρ^V`, and a regular-approach detector.
//! - [`parallelogram`]: the centrally symmetric four-vortex family, exact
//!   configuration-preservation checks, and the analytic collapse curve.
//! - [`reduction`]: the near-binary chart, the canonical transformation chain
//!   into action-angle-like coordinates, the energy expansion in the binary
//!   radius ε, the averaged Hamiltonian, and the reduced one-degree-of-freedom
//!   flow.
//! - [`batch`]: data-parallel helpers for ensembles of independent runs
//!   (rayon-backed when the `parallel` feature is on, sequential otherwise).
//!
//! All quantities are double precision. All public functions are pure:
//! identical input bits produce identical output bits, and nothing here holds
//! shared mutable state, so values can be shared freely across threads.

pub mod batch;
pub mod collisions;
pub mod dynamics;
pub mod error;
pub mod ode;
pub mod parallelogram;
pub mod reduction;
pub mod sqdist;
pub mod state;

pub use error::VortexError;
pub use state::{InvariantSet, VortexState};

/// Convenient alias used throughout the crate.
pub type Result<T> = std::result::Result<T, VortexError>;
