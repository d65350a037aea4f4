//! Dense complex linear-algebra helpers shared by the physics modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix; every operator in the crate is one of these.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector (pure states).
pub type CVector = DVector<Complex64>;

/// Identity matrix of the given dimension.
pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Largest absolute element of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest absolute element.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Deviation of `a` from Hermiticity: max |a_ij - conj(a_ji)|.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, eigenvalues ascending.
///
/// Columns of the returned matrix are the eigenvectors, ordered to match.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = a.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// exp(-i * angle * h) for Hermitian `h`, by spectral decomposition.
pub fn hermitian_rotation(h: &CMatrix, angle: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let n = h.nrows();
    let mut phased = vectors.clone();
    for (k, lambda) in values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -angle * lambda);
        for i in 0..n {
            phased[(i, k)] *= phase;
        }
    }
    &phased * vectors.adjoint()
}

/// Trace over the second (source, 2-dimensional) tensor factor.
///
/// Indexing convention: joint index = reference_index * 2 + source_index.
pub fn partial_trace_source(joint: &CMatrix, ref_dim: usize) -> Result<CMatrix> {
    expect_joint_dim(joint, ref_dim)?;
    Ok(CMatrix::from_fn(ref_dim, ref_dim, |i, j| {
        joint[(2 * i, 2 * j)] + joint[(2 * i + 1, 2 * j + 1)]
    }))
}

/// Trace over the first (reference) tensor factor, leaving a 2x2 matrix.
pub fn partial_trace_reference(joint: &CMatrix, ref_dim: usize) -> Result<CMatrix> {
    expect_joint_dim(joint, ref_dim)?;
    Ok(CMatrix::from_fn(2, 2, |s, t| {
        (0..ref_dim).map(|i| joint[(2 * i + s, 2 * i + t)]).sum()
    }))
}

fn expect_joint_dim(joint: &CMatrix, ref_dim: usize) -> Result<()> {
    if joint.nrows() != 2 * ref_dim || joint.ncols() != 2 * ref_dim {
        return Err(Error::DimensionMismatch {
            expected: 2 * ref_dim,
            found: joint.nrows(),
        });
    }
    Ok(())
}
