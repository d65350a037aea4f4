//! Seeded random states for tests and reproducible experiment inputs.

use num_complex::Complex64;
use rand::Rng;

use crate::linalg::CMatrix;
use crate::spin::{DensityMatrix, ReferenceGeometry, SourceState};

/// Random full-rank density matrix rho = G G^dag / Tr(G G^dag) with
/// Ginibre-distributed G.
pub fn random_density_matrix<R: Rng + ?Sized>(geom: ReferenceGeometry, rng: &mut R) -> DensityMatrix {
    let d = geom.dim();
    let g = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(standard_normal(rng), standard_normal(rng))
    });
    let mut mat = &g * g.adjoint();
    let trace = mat.trace().re;
    mat.unscale_mut(trace);
    DensityMatrix::from_raw_unchecked(mat)
}

/// Random source state drawn uniformly from the Bloch ball of radius 1/2.
pub fn random_source_state<R: Rng + ?Sized>(rng: &mut R) -> SourceState {
    loop {
        let candidate = [
            rng.random_range(-0.5..=0.5),
            rng.random_range(-0.5..=0.5),
            rng.random_range(-0.5..=0.5),
        ];
        if let Ok(state) = SourceState::new(candidate) {
            return state;
        }
    }
}

/// Random unit direction, uniform on the sphere.
pub fn random_unit_axis<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [standard_normal(rng), standard_normal(rng), standard_normal(rng)];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-3 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; avoids pulling in a distributions crate for one density.
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}
