//! Error type shared by every module of the crate.

use thiserror::Error;

/// Everything that can go wrong across state handling, integration, shape
/// analysis, and the reduction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VortexError {
    /// Fewer than two vortices, or mismatched position/strength lengths.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A vortex with zero circulation (the model assumes every Γ_α ≠ 0).
    #[error("vortex {index} has zero strength")]
    ZeroStrength { index: usize },

    /// Two vortices occupy the same point, so the induced velocity and the
    /// energy are undefined.
    #[error("vortices {i} and {j} coincide (separation {separation:.3e})")]
    SingularConfiguration { i: usize, j: usize, separation: f64 },

    /// An operation that needs Σ Γ_α ≠ 0 (recentering, binary charts) was
    /// given a strength vector summing to zero.
    #[error("total strength is zero: {context}")]
    ZeroTotalStrength { context: String },

    /// Integrator configuration violates its own constraints.
    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),

    /// The shape map is undefined because every squared distance vanishes.
    #[error("undefined shape: all squared distances are zero")]
    UndefinedShape,

    /// An analysis needs more samples than the trajectory provides.
    #[error("trajectory too short: {len} samples, need at least {need}")]
    TrajectoryTooShort { len: usize, need: usize },

    /// A closed-form evaluation left its real domain; carries the offending
    /// expression and its value.
    #[error("domain violation in {expression}: argument {value:.6e}")]
    DomainViolation { expression: String, value: f64 },

    /// A denominator in a closed-form expression vanished.
    #[error("singular denominator in {expression}")]
    SingularDenominator { expression: String },

    /// The strength vector does not satisfy the resonance condition
    /// Γ_a + Γ_b = Γ_c = Γ_d required by the reduction chain.
    #[error("strength condition violated: {0}")]
    StrengthCondition(String),

    /// Parallelogram-family parameters outside the studied range.
    #[error("parallelogram parameters out of range: {0}")]
    ParallelogramDomain(String),

    /// A numerical fit could not be performed reliably.
    #[error("fit failed: {0}")]
    FitFailure(String),
}
