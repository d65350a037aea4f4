//! Angular-momentum operators, reference states, and matrix/statistical
//! utilities for arbitrary half-integer spin l.
//!
//! Conventions, shared by every module in the crate:
//! - the L_z eigenbasis with m increasing from -l to +l,
//! - l stored as the integer 2l so half-integer spins carry no rounding,
//! - dense complex matrices throughout (target scale d <= ~400).

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::tol;

/// Spin quantum number of the reference, stored as 2l; dimension d = 2l + 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReferenceGeometry {
    twice_ell: u32,
}

impl ReferenceGeometry {
    /// Geometry for spin l = twice_ell / 2. Spin 0 cannot point anywhere
    /// and is rejected.
    pub fn new(twice_ell: u32) -> Result<Self> {
        if twice_ell == 0 {
            return Err(Error::InvalidGeometry(
                "twice_ell must be >= 1; a spin-0 object cannot serve as a directional reference"
                    .into(),
            ));
        }
        Ok(Self { twice_ell })
    }

    /// Geometry recovered from a Hilbert-space dimension d = 2l + 1.
    pub fn from_dim(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidGeometry(format!(
                "dimension {dim} is too small for a spin reference"
            )));
        }
        Self::new((dim - 1) as u32)
    }

    pub fn twice_ell(&self) -> u32 {
        self.twice_ell
    }

    /// Hilbert-space dimension d = 2l + 1.
    pub fn dim(&self) -> usize {
        self.twice_ell as usize + 1
    }

    /// The spin quantum number l (may be half-integer).
    pub fn ell(&self) -> f64 {
        self.twice_ell as f64 / 2.0
    }

    /// l(l+1), the eigenvalue of L^2.
    pub fn casimir(&self) -> f64 {
        self.ell() * (self.ell() + 1.0)
    }

    /// Magnetic quantum number at basis index `i` (index 0 is m = -l).
    pub fn m_value(&self, index: usize) -> f64 {
        (2 * index as i64 - self.twice_ell as i64) as f64 / 2.0
    }

    /// All m values, increasing from -l to +l.
    pub fn m_values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim()).map(move |i| self.m_value(i))
    }
}

/// <m+1| L_+ |m> = sqrt(l(l+1) - m(m+1)); zero at the m = l boundary.
pub fn ladder_coefficient(geom: ReferenceGeometry, m: f64) -> f64 {
    let value = geom.casimir() - m * (m + 1.0);
    if value <= 0.0 {
        0.0
    } else {
        value.sqrt()
    }
}

/// The six angular-momentum matrices of one spin-l irrep.
#[derive(Debug, Clone)]
pub struct AngularMomentumOps {
    pub geom: ReferenceGeometry,
    pub lx: CMatrix,
    pub ly: CMatrix,
    pub lz: CMatrix,
    pub lp: CMatrix,
    pub lm: CMatrix,
    pub lsq: CMatrix,
}

/// Build L_x, L_y, L_z, L_+, L_-, L^2 in the increasing-m basis.
pub fn angular_momentum_ops(geom: ReferenceGeometry) -> AngularMomentumOps {
    let d = geom.dim();
    let mut lp = CMatrix::zeros(d, d);
    for i in 0..d - 1 {
        // L_+ |m> = c(m) |m+1>, row m+1, column m.
        lp[(i + 1, i)] = Complex64::new(ladder_coefficient(geom, geom.m_value(i)), 0.0);
    }
    let lm = lp.adjoint();
    let lx = (&lp + &lm).scale(0.5);
    let ly = (&lp - &lm) * Complex64::new(0.0, -0.5);
    let lz = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(geom.m_value(i), 0.0)
        } else {
            Complex64::default()
        }
    });
    let lsq = linalg::identity(d) * Complex64::new(geom.casimir(), 0.0);
    AngularMomentumOps { geom, lx, ly, lz, lp, lm, lsq }
}

/// Spin-1/2 operators S_x, S_y, S_z (the d = 2 instance of the above).
pub fn spin_half_ops() -> AngularMomentumOps {
    angular_momentum_ops(ReferenceGeometry::new(1).expect("spin 1/2 geometry"))
}

/// exp(-i angle L_y) on the spin-l irrep, by spectral decomposition.
pub fn rotation_y(geom: ReferenceGeometry, angle: f64) -> CMatrix {
    linalg::hermitian_rotation(&angular_momentum_ops(geom).ly, angle)
}

/// exp(-i angle L_z): a phase diagonal, computed exactly.
pub fn rotation_z(geom: ReferenceGeometry, angle: f64) -> CMatrix {
    let d = geom.dim();
    CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, -angle * geom.m_value(i))
        } else {
            Complex64::default()
        }
    })
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite
/// within the crate tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validate and wrap a matrix. Positivity is checked by full
    /// eigendecomposition; violations beyond tolerance are errors, never
    /// silently repaired.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidState(format!(
                "density matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let state = Self { mat };
        state.validate()?;
        Ok(state)
    }

    /// Wrap without validating. For internal fast paths whose construction
    /// preserves the invariants analytically; debug builds still spot-check.
    pub(crate) fn from_raw_unchecked(mat: CMatrix) -> Self {
        debug_assert!(linalg::hermiticity_defect(&mat) < 1e-9);
        debug_assert!((mat.trace().re - 1.0).abs() < 1e-9);
        Self { mat }
    }

    /// |psi><psi| from a state vector; the vector is normalized first.
    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm < 1e-300 {
            return Err(Error::InvalidState("cannot normalize the zero vector".into()));
        }
        let unit = psi.unscale(norm);
        let mat = CMatrix::from_fn(psi.len(), psi.len(), |i, j| unit[i] * unit[j].conj());
        Ok(Self { mat })
    }

    /// I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: linalg::identity(dim).unscale(dim as f64),
        }
    }

    /// |l, m><l, m| for the basis index holding magnetic number m.
    pub fn basis_state(geom: ReferenceGeometry, index: usize) -> Self {
        let mut mat = CMatrix::zeros(geom.dim(), geom.dim());
        mat[(index, index)] = Complex64::new(1.0, 0.0);
        Self { mat }
    }

    /// Diagonal state from a probability vector (normalized by the caller).
    pub fn from_diagonal(probabilities: &[f64]) -> Result<Self> {
        let d = probabilities.len();
        let mat = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(probabilities[i], 0.0)
            } else {
                Complex64::default()
            }
        });
        Self::new(mat)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Re Tr(rho); the imaginary part is zero for a valid state.
    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Tr(rho^2), 1 for pure states.
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Real diagonal (populations in the increasing-m basis).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.mat)
    }

    /// <A> = Re Tr(rho A) for Hermitian A.
    pub fn expectation(&self, operator: &CMatrix) -> f64 {
        let mut acc = Complex64::default();
        for i in 0..self.dim() {
            for k in 0..self.dim() {
                acc += self.mat[(i, k)] * operator[(k, i)];
            }
        }
        acc.re
    }

    /// Check Hermiticity, trace, and positivity against the crate tolerances.
    pub fn validate(&self) -> Result<()> {
        let defect = linalg::hermiticity_defect(&self.mat);
        if defect > tol::HERMITICITY {
            return Err(Error::InvalidState(format!(
                "Hermiticity defect {defect:.3e} exceeds {:.0e}",
                tol::HERMITICITY
            )));
        }
        let trace_error = (self.mat.trace().re - 1.0).abs().max(self.mat.trace().im.abs());
        if trace_error > tol::TRACE {
            return Err(Error::InvalidState(format!(
                "trace deviates from 1 by {trace_error:.3e}"
            )));
        }
        let min_eigenvalue = self
            .eigenvalues()
            .first()
            .copied()
            .ok_or_else(|| Error::InvalidState("empty matrix".into()))?;
        if min_eigenvalue < tol::POSITIVITY {
            return Err(Error::PositivityViolation { min_eigenvalue });
        }
        Ok(())
    }
}

/// A spin-1/2 source ensemble, reduced to its Bloch vector <S>.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceState {
    bloch: [f64; 3],
}

impl SourceState {
    /// Bloch vector with |<S>| <= 1/2.
    pub fn new(bloch: [f64; 3]) -> Result<Self> {
        let norm = (bloch[0] * bloch[0] + bloch[1] * bloch[1] + bloch[2] * bloch[2]).sqrt();
        if norm > 0.5 + tol::BLOCH_BALL {
            return Err(Error::InvalidParameter(format!(
                "|<S>| = {norm:.6} exceeds 1/2"
            )));
        }
        Ok(Self { bloch })
    }

    /// Source polarized along +z with <S_z> = s_z (signed).
    pub fn polarized_z(s_z: f64) -> Result<Self> {
        Self::new([0.0, 0.0, s_z])
    }

    /// The maximally mixed source, <S> = 0.
    pub fn unpolarized() -> Self {
        Self { bloch: [0.0; 3] }
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    /// |<S>| in [0, 1/2].
    pub fn polarization(&self) -> f64 {
        let [x, y, z] = self.bloch;
        (x * x + y * y + z * z).sqrt()
    }

    /// Reconstruction xi = I/2 + 2 <S>.S as a 2x2 density matrix.
    pub fn density_matrix(&self) -> DensityMatrix {
        let s = spin_half_ops();
        let mut mat = linalg::identity(2).scale(0.5);
        mat += (&s.lx).scale(2.0 * self.bloch[0]);
        mat += (&s.ly).scale(2.0 * self.bloch[1]);
        mat += (&s.lz).scale(2.0 * self.bloch[2]);
        DensityMatrix::from_raw_unchecked(mat)
    }
}

/// Coherent state exp(-i phi L_z) exp(-i theta L_y) |l, l> as a state vector.
pub fn coherent_state_vector(geom: ReferenceGeometry, theta: f64, phi: f64) -> CVector {
    let d = geom.dim();
    let mut top = CVector::zeros(d);
    top[d - 1] = Complex64::new(1.0, 0.0);
    let tilted = rotation_y(geom, theta) * top;
    let phases = DVector::from_iterator(
        d,
        (0..d).map(|i| Complex64::from_polar(1.0, -phi * geom.m_value(i))),
    );
    tilted.component_mul(&phases)
}

/// Coherent state density matrix; the maximal-polarization state along
/// the direction with polar angle theta and azimuth phi.
pub fn coherent_state(geom: ReferenceGeometry, theta: f64, phi: f64) -> DensityMatrix {
    let psi = coherent_state_vector(geom, theta, phi);
    DensityMatrix::from_pure(&psi).expect("coherent state vector has unit norm")
}

/// Direction diagnostics of a reference state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateStatistics {
    /// (<L_x>, <L_y>, <L_z>).
    pub l_exp: [f64; 3],
    /// n_rho = <L> / (l + 1/2); |n_rho| <= 1.
    pub n_rho: [f64; 3],
    /// |n_rho|.
    pub r: f64,
    /// Polar angle of <L> from +z in [0, pi]; `None` when |<L>| is below
    /// the direction tolerance (the state points nowhere).
    pub theta: Option<f64>,
}

/// Angular-momentum expectations of `rho`, read directly off the matrix
/// entries (L_z is diagonal, L_+ is a single subdiagonal).
pub fn state_statistics(rho: &DensityMatrix, geom: ReferenceGeometry) -> Result<StateStatistics> {
    if rho.dim() != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), found: rho.dim() });
    }
    Ok(statistics_raw(rho.matrix(), geom))
}

/// Statistics from a raw matrix (no state validation); shared with the
/// trajectory fast path.
pub(crate) fn statistics_raw(mat: &CMatrix, geom: ReferenceGeometry) -> StateStatistics {
    let d = geom.dim();
    let mut lz = 0.0;
    for i in 0..d {
        lz += geom.m_value(i) * mat[(i, i)].re;
    }
    // <L_+> = sum_m c(m) rho[m, m+1]; then <L_x> = Re, <L_y> = Im.
    let mut lplus = Complex64::default();
    for i in 0..d - 1 {
        lplus += mat[(i, i + 1)] * Complex64::new(ladder_coefficient(geom, geom.m_value(i)), 0.0);
    }
    let l_exp = [lplus.re, lplus.im, lz];
    let scale = geom.ell() + 0.5;
    let n_rho = [l_exp[0] / scale, l_exp[1] / scale, l_exp[2] / scale];
    let r = (n_rho[0] * n_rho[0] + n_rho[1] * n_rho[1] + n_rho[2] * n_rho[2]).sqrt();
    let l_norm = (l_exp[0] * l_exp[0] + l_exp[1] * l_exp[1] + l_exp[2] * l_exp[2]).sqrt();
    let theta = if l_norm < tol::DIRECTION {
        None
    } else {
        Some((l_exp[0] * l_exp[0] + l_exp[1] * l_exp[1]).sqrt().atan2(l_exp[2]))
    };
    StateStatistics { l_exp, n_rho, r, theta }
}

/// Trace distance (1/2) ||rho - sigma||_1 between two states; in [0, 1].
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    Ok(hermitian_trace_distance(rho.matrix(), sigma.matrix()))
}

/// Trace distance between raw Hermitian unit-trace matrices. Used where one
/// side is a diagnostic object that is not positive semidefinite.
pub fn hermitian_trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a - b;
    0.5 * linalg::hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>()
}
