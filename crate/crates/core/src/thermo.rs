//! Closed-form thermodynamics of the asymptotic reference state.
//!
//! A source with polarization <S_z> acts as a bath at inverse temperature
//! beta = 2 arctanh(2 <S_z>) (B = 1 units). The reference thermalizes to the
//! geometric-ladder state with P_{m+1}/P_m = (1+2<S_z>)/(1-2<S_z>) = e^beta,
//! i.e. it aligns with the source polarization; this sign is fixed by
//! detailed balance with the transition probabilities and by the closed-form
//! <L_z>, which is positive for positive polarization.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::spin::{DensityMatrix, ReferenceGeometry, SourceState};
use crate::tol;

fn check_polarization(s_z: f64) -> Result<()> {
    if s_z.abs() > 0.5 + tol::BLOCH_BALL {
        return Err(Error::InvalidParameter(format!(
            "|<S_z>| = {} exceeds 1/2",
            s_z.abs()
        )));
    }
    Ok(())
}

/// beta = 2 arctanh(2 s_z); +-infinity at the fully polarized endpoints.
/// Evaluated on |s_z| with the sign applied afterwards, so the antisymmetry
/// is exact in floating point.
pub fn inverse_temperature(s_z: f64) -> Result<f64> {
    check_polarization(s_z)?;
    let magnitude = if s_z.abs() >= 0.5 {
        f64::INFINITY
    } else {
        2.0 * (2.0 * s_z.abs()).atanh()
    };
    Ok(if s_z < 0.0 { -magnitude } else { magnitude })
}

/// Von Neumann entropy of one bath particle, in bits: H(1/2 + s_z).
pub fn bath_entropy_bits(s_z: f64) -> Result<f64> {
    check_polarization(s_z)?;
    let p = (0.5 + s_z).clamp(0.0, 1.0);
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// ln Z with Z = sinh(beta d / 2) / sinh(beta / 2), evaluated so that large
/// |beta| d cannot overflow. Even in beta; ln d at beta = 0 by continuity.
pub fn ln_partition_function(beta: f64, geom: ReferenceGeometry) -> f64 {
    let d = geom.dim() as f64;
    let x = beta.abs() / 2.0;
    if x * d < 1e-4 {
        // sinh(dx)/sinh(x) = d (1 + (d^2-1) x^2/6 + ...).
        return d.ln() + ((d * d - 1.0) * x * x / 6.0).ln_1p();
    }
    // ln sinh(y) = y + ln(1 - e^{-2y}) - ln 2, stable for y >> 1.
    let ln_sinh = |y: f64| y + (-(-2.0 * y).exp()).ln_1p() - std::f64::consts::LN_2;
    ln_sinh(d * x) - ln_sinh(x)
}

/// Z itself; overflows to +infinity only where the value genuinely exceeds
/// the f64 range (|beta| d beyond ~1400).
pub fn partition_function(beta: f64, geom: ReferenceGeometry) -> f64 {
    ln_partition_function(beta, geom).exp()
}

/// The thermal (asymptotic) reference state: diagonal with
/// P_m proportional to ((1+2 s_z)/(1-2 s_z))^m. Pure |l, +-l> at s_z = +-1/2.
pub fn thermal_state(s_z: f64, geom: ReferenceGeometry) -> Result<DensityMatrix> {
    check_polarization(s_z)?;
    let d = geom.dim();
    if s_z.abs() >= 0.5 {
        let index = if s_z > 0.0 { d - 1 } else { 0 };
        return Ok(DensityMatrix::basis_state(geom, index));
    }
    let beta = 2.0 * (2.0 * s_z).atanh();
    // Softmax over beta * m, shifted by the maximum for stability.
    let shift = beta.abs() * geom.ell();
    let weights: Vec<f64> = geom.m_values().map(|m| (beta * m - shift).exp()).collect();
    let total: f64 = weights.iter().sum();
    DensityMatrix::from_diagonal(&weights.iter().map(|w| w / total).collect::<Vec<_>>())
}

/// Asymptotic <L_z> in closed form:
///
///   <L_z> = (d/2) coth(d arctanh(2 s_z)) - 1/(4 s_z),
///
/// antisymmetric in s_z, 0 at s_z = 0 and +-l at s_z = +-1/2 by continuity.
/// A series branch handles the small-argument cancellation between the two
/// coth poles.
pub fn thermal_lz(s_z: f64, geom: ReferenceGeometry) -> Result<f64> {
    check_polarization(s_z)?;
    let magnitude = thermal_lz_magnitude(s_z.abs(), geom);
    Ok(if s_z < 0.0 { -magnitude } else { magnitude })
}

fn thermal_lz_magnitude(s: f64, geom: ReferenceGeometry) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if s >= 0.5 {
        return geom.ell();
    }
    let d = geom.dim() as f64;
    let x = (2.0 * s).atanh(); // beta / 2
    if d * x < 0.05 {
        // (d/2) coth(dx) - (1/2) coth(x) expanded about x = 0; the 1/(2x)
        // poles cancel exactly, so sum the series instead of subtracting
        // two nearly equal large terms.
        let x2 = x * x;
        let d2 = d * d;
        return x * (d2 - 1.0) / 6.0 - x * x2 * (d2 * d2 - 1.0) / 90.0
            + x * x2 * x2 * (d2 * d2 * d2 - 1.0) / 945.0;
    }
    d / (2.0 * (d * x).tanh()) - 1.0 / (4.0 * s)
}

/// Which asymptotic-merit regime a polarization falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarizationRegime {
    /// |s_z| < 1/l: the merit stays small, |n_rho| ~ (4/3) l |s_z|.
    SmallPolarization,
    /// |s_z| >= 1/l: the merit approaches 1, |n_rho| >= 1 - 1/(4 l |s_z|).
    FinitePolarization,
}

/// Figure of merit of the thermalized reference measured along its own axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticMerit {
    /// |n_rho| = |<L_z>_thermal| / (l + 1/2).
    pub n_rho_len: f64,
    pub regime: PolarizationRegime,
    /// The regime's reference value: the small-polarization expansion
    /// (4/3) l |s_z|, or the finite-polarization bound 1 - 1/(4 l |s_z|).
    pub regime_reference: f64,
}

/// Asymptotic |n_rho| with the applicable regime bound.
pub fn asymptotic_merit(s_z: f64, geom: ReferenceGeometry) -> Result<AsymptoticMerit> {
    let lz = thermal_lz(s_z, geom)?;
    let ell = geom.ell();
    let n_rho_len = lz.abs() / (ell + 0.5);
    let s = s_z.abs();
    let (regime, regime_reference) = if s < 1.0 / ell {
        (PolarizationRegime::SmallPolarization, 4.0 / 3.0 * ell * s)
    } else {
        (PolarizationRegime::FinitePolarization, 1.0 - 1.0 / (4.0 * ell * s))
    };
    Ok(AsymptoticMerit { n_rho_len, regime, regime_reference })
}

/// Sampled thermal curve <L_z>/l vs s_z over [-1/2, 1/2].
///
/// The grid is mirrored around zero so the antisymmetry of the curve is
/// exact in floating point.
pub fn thermal_curve(geom: ReferenceGeometry, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if n_points < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 curve points, got {n_points}"
        )));
    }
    let step = 1.0 / (n_points - 1) as f64;
    let mut s_values = vec![0.0; n_points];
    for i in 0..=(n_points - 1) / 2 {
        let magnitude = 0.5 - i as f64 * step;
        s_values[i] = -magnitude;
        s_values[n_points - 1 - i] = magnitude;
    }
    let ell = geom.ell();
    s_values
        .into_iter()
        .map(|s| Ok((s, thermal_lz(s, geom)? / ell)))
        .collect()
}

/// Largest 2l for which the 2^(2l)-dimensional joint space is built.
pub const MAX_SYMMETRIC_TWICE_ELL: u32 = 12;

/// Asymptotic state from the symmetric-subspace characterization:
/// project xi^(x 2l) onto the symmetric (Dicke) subspace of 2l qubits,
/// compress to the d-dimensional irrep, normalize.
pub fn symmetric_subspace_state(
    xi: &SourceState,
    geom: ReferenceGeometry,
) -> Result<DensityMatrix> {
    let n = geom.twice_ell();
    if n > MAX_SYMMETRIC_TWICE_ELL {
        return Err(Error::InvalidParameter(format!(
            "twice_ell = {n} exceeds {MAX_SYMMETRIC_TWICE_ELL}; the joint space would have 2^{n} dimensions"
        )));
    }
    let n = n as usize;
    let span = 1usize << n;
    let xi_mat = xi.density_matrix();
    let x = xi_mat.matrix();

    // Bitstrings bucketed by popcount; bit = 1 means spin up, matching the
    // increasing-m single-qubit basis.
    let mut by_weight: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for idx in 0..span {
        by_weight[idx.count_ones() as usize].push(idx);
    }
    let inv_sqrt_binom: Vec<f64> =
        by_weight.iter().map(|bucket| 1.0 / (bucket.len() as f64).sqrt()).collect();

    let d = geom.dim();
    let mut compressed = CMatrix::zeros(d, d);
    let mut column = vec![num_complex::Complex64::default(); span];
    for k in 0..=n {
        // Dense vector xi^(x n) |D_k>, built by applying xi site by site.
        column.iter_mut().for_each(|c| *c = num_complex::Complex64::default());
        for &idx in &by_weight[k] {
            column[idx] = num_complex::Complex64::new(inv_sqrt_binom[k], 0.0);
        }
        for site in 0..n {
            let bit = 1usize << site;
            for idx in 0..span {
                if idx & bit == 0 {
                    let low = column[idx];
                    let high = column[idx | bit];
                    column[idx] = x[(0, 0)] * low + x[(0, 1)] * high;
                    column[idx | bit] = x[(1, 0)] * low + x[(1, 1)] * high;
                }
            }
        }
        for j in 0..=n {
            let overlap: num_complex::Complex64 =
                by_weight[j].iter().map(|&idx| column[idx]).sum();
            compressed[(j, k)] = overlap * num_complex::Complex64::new(inv_sqrt_binom[j], 0.0);
        }
    }
    let trace = compressed.trace().re;
    if trace <= 0.0 {
        return Err(Error::Numerical("symmetric projection has nonpositive trace".into()));
    }
    compressed.unscale_mut(trace);
    DensityMatrix::new(compressed)
}
