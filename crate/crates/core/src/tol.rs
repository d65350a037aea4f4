//! Numerical tolerances used across the crate.
//!
//! Two tiers: algebraic identities evaluated in a handful of operations are
//! held to 1e-12; quantities that pass through an eigendecomposition or
//! accumulate over channel iterations get 1e-10.

/// Exact algebraic identities (commutators, completeness sums, trace checks).
pub const ALGEBRAIC: f64 = 1e-12;

/// Identities checked after eigendecomposition or long iteration.
pub const ITERATED: f64 = 1e-10;

/// Max absolute element deviation from Hermiticity accepted in a density matrix.
pub const HERMITICITY: f64 = 1e-12;

/// Deviation of the trace from 1 accepted in a density matrix.
pub const TRACE: f64 = 1e-12;

/// Lower bound on eigenvalues of a density matrix. States are never
/// renormalized silently; a violation beyond this raises an error.
pub const POSITIVITY: f64 = -1e-10;

/// Below this angular-momentum length the polar angle of a state is
/// reported as undefined rather than defaulted.
pub const DIRECTION: f64 = 1e-12;

/// Accepted deviation of a measurement axis from unit norm.
pub const UNIT_AXIS: f64 = 1e-12;

/// Slack on the |<S>| <= 1/2 Bloch-ball bound.
pub const BLOCH_BALL: f64 = 1e-12;
