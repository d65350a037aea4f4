//! The joint measurement, the POVM it induces on the source, and the
//! operational quality metrics of the reference.
//!
//! Tensor ordering is reference (x) source everywhere.

use num_complex::Complex64;

use crate::channel::{self, AlignedFrame};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::spin::{
    angular_momentum_ops, spin_half_ops, state_statistics, statistics_raw, DensityMatrix,
    ReferenceGeometry, SourceState,
};

/// Projectors onto the two total-spin sectors j = l +- 1/2 of the joint
/// (2d-dimensional) space.
#[derive(Debug, Clone)]
pub struct ProjectorPair {
    pub pi_plus: CMatrix,
    pub pi_minus: CMatrix,
}

/// Pi_+- = (I +- (4 L.S + I)/d) / 2 on reference (x) source.
///
/// Tr Pi_+ = d + 1 and Tr Pi_- = d - 1, the dimensions of the two sectors.
pub fn total_projectors(geom: ReferenceGeometry) -> ProjectorPair {
    let l = angular_momentum_ops(geom);
    let s = spin_half_ops();
    let coupling = l.lx.kronecker(&s.lx) + l.ly.kronecker(&s.ly) + l.lz.kronecker(&s.lz);
    let joint_dim = 2 * geom.dim();
    let identity = linalg::identity(joint_dim);
    let core = (coupling.scale(4.0) + &identity).unscale(geom.dim() as f64);
    let pi_plus = (&identity + &core).scale(0.5);
    let pi_minus = (&identity - &core).scale(0.5);
    ProjectorPair { pi_plus, pi_minus }
}

/// The two-outcome POVM induced on a source particle.
#[derive(Debug, Clone)]
pub struct PovmPair {
    pub lambda_plus: CMatrix,
    pub lambda_minus: CMatrix,
}

/// POVM induced on the source by a reference in state `rho`:
///
///   Lambda_+ = (l+1)/d I + n_rho . S,   Lambda_- = l/d I - n_rho . S.
pub fn induced_povm(rho: &DensityMatrix, geom: ReferenceGeometry) -> Result<PovmPair> {
    let stats = state_statistics(rho, geom)?;
    let s = spin_half_ops();
    let n_dot_s =
        (&s.lx).scale(stats.n_rho[0]) + (&s.ly).scale(stats.n_rho[1]) + (&s.lz).scale(stats.n_rho[2]);
    let d = geom.dim() as f64;
    let ell = geom.ell();
    Ok(PovmPair {
        lambda_plus: linalg::identity(2).scale((ell + 1.0) / d) + &n_dot_s,
        lambda_minus: linalg::identity(2).scale(ell / d) - &n_dot_s,
    })
}

/// The projective measurement the reference is trying to simulate:
/// P_+- = I/2 +- n.S, rank-1 projectors along the unit axis `n_hat`.
pub fn ideal_projectors(n_hat: [f64; 3]) -> Result<PovmPair> {
    channel::check_unit_axis(n_hat)?;
    let s = spin_half_ops();
    let n_dot_s = (&s.lx).scale(n_hat[0]) + (&s.ly).scale(n_hat[1]) + (&s.lz).scale(n_hat[2]);
    Ok(PovmPair {
        lambda_plus: linalg::identity(2).scale(0.5) + &n_dot_s,
        lambda_minus: linalg::identity(2).scale(0.5) - &n_dot_s,
    })
}

/// Average success probability of telling +-n_hat-polarized test particles
/// apart with the reference in state `rho`:
///
///   Q_ave = (1 + n_hat . n_rho) / 2.
pub fn figure_of_merit(rho: &DensityMatrix, n_hat: [f64; 3], geom: ReferenceGeometry) -> Result<f64> {
    channel::check_unit_axis(n_hat)?;
    let stats = state_statistics(rho, geom)?;
    Ok(0.5 * (1.0 + n_hat[0] * stats.n_rho[0] + n_hat[1] * stats.n_rho[1] + n_hat[2] * stats.n_rho[2]))
}

/// Outcome probabilities p_+- = Tr[Pi_+- (rho x xi)] of one joint measurement,
/// evaluated literally on the joint space.
pub fn outcome_probabilities(
    rho: &DensityMatrix,
    xi: &SourceState,
    geom: ReferenceGeometry,
) -> Result<(f64, f64)> {
    if rho.dim() != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), found: rho.dim() });
    }
    let projectors = total_projectors(geom);
    let joint = rho.matrix().kronecker(xi.density_matrix().matrix());
    // Tr(P J) without forming the product matrix.
    let overlap = |p: &CMatrix| -> f64 {
        let n = p.nrows();
        let mut acc = Complex64::default();
        for i in 0..n {
            for k in 0..n {
                acc += p[(i, k)] * joint[(k, i)];
            }
        }
        acc.re
    };
    Ok((overlap(&projectors.pi_plus), overlap(&projectors.pi_minus)))
}

/// Result of a longevity run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Longevity {
    /// First step at which the figure of merit dropped below the threshold.
    Drops(u64),
    /// The merit stayed at or above the threshold for the whole budget.
    ExceedsBudget,
}

/// Number of channel applications before the figure of merit against
/// `n_hat` drops below `threshold`, up to `budget` steps.
///
/// Runs the exact channel (in the source-aligned frame, O(d^2) per step),
/// not the semiclassical model.
pub fn longevity(
    rho0: &DensityMatrix,
    xi: &SourceState,
    n_hat: [f64; 3],
    threshold: f64,
    budget: u64,
    geom: ReferenceGeometry,
) -> Result<Longevity> {
    if !(0.5..1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "longevity threshold must lie in (1/2, 1), got {threshold}"
        )));
    }
    let initial = figure_of_merit(rho0, n_hat, geom)?;
    if initial < threshold {
        return Err(Error::InvalidParameter(format!(
            "initial figure of merit {initial:.6} is already below the threshold {threshold}"
        )));
    }

    let frame = AlignedFrame::for_source(xi, geom);
    let axis_rotated = frame.vector_to_rotated(n_hat);
    let scale = geom.ell() + 0.5;
    let mut current = frame.to_rotated(rho0.matrix());
    let mut scratch = current.clone();
    for t in 1..=budget {
        channel::polarized_step_raw(&current, &mut scratch, frame.s, geom);
        std::mem::swap(&mut current, &mut scratch);
        let stats = statistics_raw(&current, geom);
        let merit = 0.5
            * (1.0
                + (axis_rotated[0] * stats.l_exp[0]
                    + axis_rotated[1] * stats.l_exp[1]
                    + axis_rotated[2] * stats.l_exp[2])
                    / scale);
        if merit < threshold {
            return Ok(Longevity::Drops(t));
        }
    }
    Ok(Longevity::ExceedsBudget)
}
