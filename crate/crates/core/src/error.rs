//! Error type shared by every module of the crate.

/// Errors raised by construction, validation, and analysis routines.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Geometry that cannot host a directional reference (e.g. spin 0).
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// Two objects that must share a Hilbert-space dimension do not.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A matrix failed the density-matrix invariants (Hermiticity, trace, positivity).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A scalar or vector argument violates its documented bounds.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Positivity drifted beyond tolerance during channel iteration.
    /// Signals accumulated numerical failure, not a modeling error.
    #[error("positivity violated: minimum eigenvalue {min_eigenvalue:.3e}")]
    PositivityViolation { min_eigenvalue: f64 },

    /// Chain analysis requested on an absorbing (|<S_z>| = 1/2) chain.
    #[error("degenerate chain: {0}")]
    DegenerateChain(String),

    /// Recording a trajectory would exceed the configured memory budget.
    #[error("memory budget exceeded: need {required} bytes, budget is {budget}")]
    MemoryBudget { required: usize, budget: usize },

    /// A numerical procedure failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
