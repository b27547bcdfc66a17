use thiserror::Error;

/// Errors shared by every module of the laboratory.
#[derive(Debug, Error)]
pub enum LadderError {
    /// A point or parameter lies outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant of the input data is violated (non-SPD metric,
    /// spacelike Killing field, negative lapse, ...).
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A grid is too coarse for the requested estimate.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// An enumeration would exceed the configured memory budget.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A spectral query reaches beyond the completeness guarantee of the
    /// cached spectrum. Never silently truncated.
    #[error("incomplete spectrum: {0}")]
    Incomplete(String),

    /// A tail bound exceeds the requested accuracy.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// The discretized pencil produced eigenvalues with imaginary parts above
    /// tolerance, signalling discretization failure or an invalid metric.
    #[error("nonreal spectrum: {0}")]
    NonrealSpectrum(String),

    /// A linear algebra kernel failed (singular system, no convergence).
    #[error("solver error: {0}")]
    Solver(String),

    /// The requested ladder slope admits no ladder at all.
    #[error("empty ladder: {0}")]
    EmptyLadder(String),

    /// Conserved-quantity drift exceeded the hard cap, or the stepper failed.
    #[error("integration failure: {0}")]
    Integration(String),

    /// Adaptive stepping collapsed into a rejection cascade.
    #[error("stiffness error: {0}")]
    Stiffness(String),

    /// Least-squares fit is degenerate or under-determined.
    #[error("fit error: {0}")]
    Fit(String),

    /// A precondition documented on the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A feature combination outside the supported surface.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, LadderError>;
