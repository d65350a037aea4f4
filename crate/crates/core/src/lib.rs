//! Numerical laboratory for the back-action dynamics of a spin-l quantum
//! reference frame (a "gyroscope") used to repeatedly measure spin-1/2
//! particles.
//!
//! The crate builds the joint measurement and its induced POVM, the exact
//! back-action channel in several mutually checking forms, the birth-death
//! Markov reduction of the diagonal dynamics, the closed-form thermodynamics
//! of the asymptotic reference, and the semiclassical equations of motion,
//! all over dense complex matrices at desk scale (d up to a few hundred).

pub mod channel;
pub mod error;
pub mod linalg;
pub mod markov;
pub mod measurement;
pub mod sample;
pub mod semiclassical;
pub mod spin;
pub mod thermo;
pub mod tol;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use spin::{DensityMatrix, ReferenceGeometry, SourceState};
