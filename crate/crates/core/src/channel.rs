//! The back-action channel: the completely positive trace-preserving map the
//! reference undergoes each time it measures one source particle.
//!
//! Four mutually checking forms are provided:
//! - `apply_channel`: production path; rotates the frame so the source
//!   polarization lies along +z, applies the polarized closed form, rotates
//!   back. O(d^2) per step.
//! - `apply_channel_polarized`: the closed form for a z-polarized source,
//!   written directly on matrix entries (L_z is diagonal, L_+- are single
//!   off-diagonals).
//! - `apply_channel_coupling_form`: the spin-coupling operator expansion with
//!   the L.S term evaluated literally on the 2d-dimensional joint space.
//! - `brute_force_step`: measure-and-discard on the joint space using the
//!   total-spin projectors; the independent oracle for everything else.
//!
//! A Kraus decomposition in a basis rotated by an arbitrary angle about y is
//! also provided, plus trajectory iteration with per-step direction records.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::measurement;
use crate::spin::{
    self, angular_momentum_ops, ladder_coefficient, statistics_raw, DensityMatrix,
    ReferenceGeometry, SourceState,
};
use crate::tol;

/// Default cap on memory used for recorded per-step states (256 MiB).
pub const DEFAULT_MEMORY_BUDGET: usize = 256 << 20;

fn check_dim(rho: &DensityMatrix, geom: ReferenceGeometry) -> Result<()> {
    if rho.dim() != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), found: rho.dim() });
    }
    Ok(())
}

fn check_polarization(s_z: f64) -> Result<()> {
    if s_z.abs() > 0.5 + tol::BLOCH_BALL {
        return Err(Error::InvalidParameter(format!("|<S_z>| = {} exceeds 1/2", s_z.abs())));
    }
    Ok(())
}

/// One channel application for a source polarized along +z, acting entrywise:
///
///   E(X) = (1/2 + (1-4s^2)/2d^2) X + (2/d^2)(L_z+s) X (L_z+s)
///          + ((1+2s)/d^2) L_+ X L_-  + ((1-2s)/d^2) L_- X L_+ .
///
/// Linear in X, so it may be applied to coherence blocks as well as states.
pub fn apply_channel_polarized_matrix(
    mat: &CMatrix,
    s_z: f64,
    geom: ReferenceGeometry,
) -> Result<CMatrix> {
    check_polarization(s_z)?;
    if mat.nrows() != geom.dim() || mat.ncols() != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), found: mat.nrows() });
    }
    let mut out = mat.clone();
    polarized_step_into(mat, &mut out, s_z, geom, &ladder_table(geom));
    Ok(out)
}

/// Ladder coefficients c(m_i) indexed by basis position.
fn ladder_table(geom: ReferenceGeometry) -> Vec<f64> {
    (0..geom.dim()).map(|i| ladder_coefficient(geom, geom.m_value(i))).collect()
}

/// Polarized step into a caller-provided buffer; the longevity loop and
/// other in-crate hot paths use this to avoid per-step allocation.
pub(crate) fn polarized_step_raw(
    mat: &CMatrix,
    out: &mut CMatrix,
    s_z: f64,
    geom: ReferenceGeometry,
) {
    polarized_step_into(mat, out, s_z, geom, &ladder_table(geom));
}

/// Entrywise polarized step, writing into `out` (may not alias `mat`).
fn polarized_step_into(
    mat: &CMatrix,
    out: &mut CMatrix,
    s_z: f64,
    geom: ReferenceGeometry,
    ladder: &[f64],
) {
    let d = geom.dim();
    let dd = (d * d) as f64;
    let stay = 0.5 + (1.0 - 4.0 * s_z * s_z) / (2.0 * dd);
    let dephase = 2.0 / dd;
    let up = (1.0 + 2.0 * s_z) / dd;
    let down = (1.0 - 2.0 * s_z) / dd;
    for i in 0..d {
        let mi = geom.m_value(i) + s_z;
        for j in 0..d {
            let mj = geom.m_value(j) + s_z;
            let mut value = (stay + dephase * mi * mj) * mat[(i, j)];
            if i > 0 && j > 0 {
                value += up * ladder[i - 1] * ladder[j - 1] * mat[(i - 1, j - 1)];
            }
            if i + 1 < d && j + 1 < d {
                value += down * ladder[i] * ladder[j] * mat[(i + 1, j + 1)];
            }
            out[(i, j)] = value;
        }
    }
}

/// Closed-form channel for a z-polarized source, with full output validation.
pub fn apply_channel_polarized(
    rho: &DensityMatrix,
    s_z: f64,
    geom: ReferenceGeometry,
) -> Result<DensityMatrix> {
    check_dim(rho, geom)?;
    let out = apply_channel_polarized_matrix(rho.matrix(), s_z, geom)?;
    DensityMatrix::new(out)
}

/// Frame in which the source polarization points along +z.
///
/// `unitary` is the spin-l representation U = exp(-i phi L_z) exp(-i theta L_y)
/// of the rotation taking +z to the polarization direction; `rotation` is the
/// matching SO(3) matrix on expectation vectors (lab = R * rotated).
pub(crate) struct AlignedFrame {
    pub s: f64,
    unitary: Option<CMatrix>,
    rotation: [[f64; 3]; 3],
}

impl AlignedFrame {
    pub fn for_source(xi: &SourceState, geom: ReferenceGeometry) -> Self {
        let [sx, sy, sz] = xi.bloch();
        let s = xi.polarization();
        let transverse = (sx * sx + sy * sy).sqrt();
        if s == 0.0 || (transverse == 0.0 && sz > 0.0) {
            // Already aligned (or no direction at all): identity frame.
            return Self { s, unitary: None, rotation: identity_rotation() };
        }
        let theta = transverse.atan2(sz);
        let phi = sy.atan2(sx);
        let unitary = spin::rotation_z(geom, phi) * spin::rotation_y(geom, theta);
        Self { s, unitary: Some(unitary), rotation: zy_rotation(theta, phi) }
    }

    /// U^dag M U: carry a lab-frame operator into the aligned frame.
    pub fn to_rotated(&self, lab: &CMatrix) -> CMatrix {
        match &self.unitary {
            None => lab.clone(),
            Some(u) => u.adjoint() * lab * u,
        }
    }

    /// U M U^dag.
    pub fn to_lab(&self, rotated: &CMatrix) -> CMatrix {
        match &self.unitary {
            None => rotated.clone(),
            Some(u) => u * rotated * u.adjoint(),
        }
    }

    /// R v: expectation vector from the aligned frame back to the lab.
    pub fn vector_to_lab(&self, v: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        [
            r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
            r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
            r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
        ]
    }

    /// R^T v: lab vector expressed in the aligned frame.
    pub fn vector_to_rotated(&self, v: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        [
            r[0][0] * v[0] + r[1][0] * v[1] + r[2][0] * v[2],
            r[0][1] * v[0] + r[1][1] * v[1] + r[2][1] * v[2],
            r[0][2] * v[0] + r[1][2] * v[1] + r[2][2] * v[2],
        ]
    }
}

fn identity_rotation() -> [[f64; 3]; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

/// R_z(phi) R_y(theta) as a 3x3 rotation on expectation vectors.
fn zy_rotation(theta: f64, phi: f64) -> [[f64; 3]; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [
        [cp * ct, -sp, cp * st],
        [sp * ct, cp, sp * st],
        [-st, 0.0, ct],
    ]
}

/// One channel application for an arbitrary source state.
///
/// The frame is rotated so <S> lies along +z, the polarized closed form is
/// applied, and the result is rotated back; channel covariance under rotations
/// makes this exact. The coupling form below is retained as a cross-check.
pub fn apply_channel(
    rho: &DensityMatrix,
    xi: &SourceState,
    geom: ReferenceGeometry,
) -> Result<DensityMatrix> {
    check_dim(rho, geom)?;
    let frame = AlignedFrame::for_source(xi, geom);
    let rotated = frame.to_rotated(rho.matrix());
    let stepped = apply_channel_polarized_matrix(&rotated, frame.s, geom)?;
    DensityMatrix::new(frame.to_lab(&stepped))
}

/// The spin-coupling operator expansion of the channel:
///
///   E(rho) = (1/2 + 1/2d^2) rho + (8/d^2) Tr_S (L.S)(rho x xi)(L.S)
///            + (2/d^2) ((L.<S>) rho + rho (L.<S>)),
///
/// with the middle term evaluated on the 2d-dimensional joint space. O(d^3);
/// kept as an independent cross-check of the production path.
pub fn apply_channel_coupling_form(
    rho: &DensityMatrix,
    xi: &SourceState,
    geom: ReferenceGeometry,
) -> Result<DensityMatrix> {
    check_dim(rho, geom)?;
    let d = geom.dim();
    let dd = (d * d) as f64;
    let l = angular_momentum_ops(geom);
    let s = spin::spin_half_ops();

    let coupling = l.lx.kronecker(&s.lx) + l.ly.kronecker(&s.ly) + l.lz.kronecker(&s.lz);
    let joint = rho.matrix().kronecker(xi.density_matrix().matrix());
    let middle = &coupling * joint * &coupling;
    let term_coupling = linalg::partial_trace_source(&middle, d)?.scale(8.0 / dd);

    let [sx, sy, sz] = xi.bloch();
    let drift = (&l.lx).scale(sx) + (&l.ly).scale(sy) + (&l.lz).scale(sz);
    let term_drift = (&drift * rho.matrix() + rho.matrix() * &drift).scale(2.0 / dd);

    let out = rho.matrix().scale(0.5 + 0.5 / dd) + term_coupling + term_drift;
    DensityMatrix::new(out)
}

/// Measure-and-discard on the joint space: project with the total-spin
/// projectors, sum the two branches, trace out the source. The literal
/// definition of the channel and the oracle for the closed forms.
pub fn brute_force_step(
    rho: &DensityMatrix,
    xi: &SourceState,
    geom: ReferenceGeometry,
) -> Result<DensityMatrix> {
    check_dim(rho, geom)?;
    let projectors = measurement::total_projectors(geom);
    let joint = rho.matrix().kronecker(xi.density_matrix().matrix());
    let plus = &projectors.pi_plus * &joint * &projectors.pi_plus;
    let minus = &projectors.pi_minus * &joint * &projectors.pi_minus;
    DensityMatrix::new(linalg::partial_trace_source(&(plus + minus), geom.dim())?)
}

/// Kraus decomposition of the polarized channel in a basis rotated by
/// `theta` about the y axis. Any `theta` reproduces the same channel; the
/// freedom is exploited by the semiclassical expansion.
#[derive(Debug, Clone)]
pub struct KrausSet {
    operators: Vec<CMatrix>,
    pub s_z: f64,
    pub theta: f64,
    geom: ReferenceGeometry,
}

/// The four Kraus operators, each scaled by 1/(d sqrt(2)):
///
///   sqrt(d^2 + 1 - 4s^2) I,
///   2i sqrt(1 - 4s^2) Ly',
///   2 Lz' + 4is sin(theta) Ly' + 2s cos(theta) I,
///   2 Lx' + 4is cos(theta) Ly' - 2s sin(theta) I,
///
/// where (Lx', Ly', Lz') is the y-rotated operator basis.
pub fn kraus_operators(s_z: f64, theta: f64, geom: ReferenceGeometry) -> Result<KrausSet> {
    check_polarization(s_z)?;
    let l = angular_momentum_ops(geom);
    let (st, ct) = theta.sin_cos();
    // Rotated basis: Lx' = cos t Lx - sin t Lz, Ly' = Ly, Lz' = sin t Lx + cos t Lz.
    let lx_t = (&l.lx).scale(ct) - (&l.lz).scale(st);
    let ly_t = l.ly.clone();
    let lz_t = (&l.lx).scale(st) + (&l.lz).scale(ct);

    let d = geom.dim() as f64;
    let norm = Complex64::new(1.0 / (d * 2.0f64.sqrt()), 0.0);
    let i2 = linalg::identity(geom.dim());
    let s = s_z;
    let e0 = (&i2 * Complex64::new((d * d + 1.0 - 4.0 * s * s).sqrt(), 0.0)) * norm;
    let e1 = (&ly_t * Complex64::new(0.0, 2.0 * (1.0 - 4.0 * s * s).max(0.0).sqrt())) * norm;
    let e2 = ((&lz_t).scale(2.0) + &ly_t * Complex64::new(0.0, 4.0 * s * st)
        + (&i2).scale(2.0 * s * ct))
        * norm;
    let e3 = ((&lx_t).scale(2.0) + &ly_t * Complex64::new(0.0, 4.0 * s * ct)
        - (&i2).scale(2.0 * s * st))
        * norm;
    Ok(KrausSet { operators: vec![e0, e1, e2, e3], s_z, theta, geom })
}

impl KrausSet {
    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// Max-element residual of the completeness sum, |sum E^dag E - I|.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.geom.dim();
        let mut sum = CMatrix::zeros(d, d);
        for e in &self.operators {
            sum += e.adjoint() * e;
        }
        linalg::max_abs_diff(&sum, &linalg::identity(d))
    }

    /// sum_a E_a X E_a^dag on a raw matrix.
    pub fn apply_matrix(&self, mat: &CMatrix) -> CMatrix {
        let d = self.geom.dim();
        let mut out = CMatrix::zeros(d, d);
        for e in &self.operators {
            out += e * mat * e.adjoint();
        }
        out
    }

    /// Channel action with output validation.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_dim(rho, self.geom)?;
        DensityMatrix::new(self.apply_matrix(rho.matrix()))
    }
}

/// One channel application for an arbitrary source, routed through the Kraus
/// form: rotate into the aligned frame, apply the Kraus operators with theta
/// chosen as the reference's polar angle there, rotate back.
pub fn apply_channel_kraus(
    rho: &DensityMatrix,
    xi: &SourceState,
    geom: ReferenceGeometry,
) -> Result<DensityMatrix> {
    check_dim(rho, geom)?;
    let frame = AlignedFrame::for_source(xi, geom);
    let rotated = frame.to_rotated(rho.matrix());
    let theta = statistics_raw(&rotated, geom).theta.unwrap_or(0.0);
    let kraus = kraus_operators(frame.s, theta, geom)?;
    DensityMatrix::new(frame.to_lab(&kraus.apply_matrix(&rotated)))
}

/// Options for trajectory iteration.
#[derive(Debug, Clone)]
pub struct IterateOptions {
    /// Keep a copy of the state at every step (subject to the budget).
    pub record_states: bool,
    /// Cap, in bytes, on recorded-state storage.
    pub memory_budget_bytes: usize,
    /// When set, record the figure of merit against this (unit) axis.
    pub merit_axis: Option<[f64; 3]>,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self {
            record_states: false,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
            merit_axis: None,
        }
    }
}

/// Per-step record of a channel trajectory. Index t runs 0..=steps, so every
/// series has length steps + 1 and entry 0 describes the initial state.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    /// (<L_x>, <L_y>, <L_z>) at each step, in the lab frame.
    pub l_exp: Vec<[f64; 3]>,
    /// Polarization length r(t) = |<L>| / (l + 1/2).
    pub r: Vec<f64>,
    /// Polar angle of <L>(t); `None` where the state has no direction.
    pub theta: Vec<Option<f64>>,
    /// Figure of merit against `merit_axis`, when requested.
    pub merit: Option<Vec<f64>>,
    /// Per-step states, when requested and within budget.
    pub states: Option<Vec<DensityMatrix>>,
    /// The state after the last step, validated.
    pub final_state: DensityMatrix,
}

impl TrajectoryRecord {
    /// Number of recorded time points (steps + 1).
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// The discrete times 0..=steps the series are indexed by.
    pub fn times(&self) -> impl Iterator<Item = usize> {
        0..self.r.len()
    }
}

/// Iterate the channel `steps` times from `rho0`, recording direction
/// statistics each step.
///
/// Runs in the source-aligned frame (one rotation in, one out), so each step
/// costs O(d^2). The recorded statistics and states are in the lab frame.
pub fn iterate(
    rho0: &DensityMatrix,
    xi: &SourceState,
    geom: ReferenceGeometry,
    steps: usize,
    opts: &IterateOptions,
) -> Result<TrajectoryRecord> {
    check_dim(rho0, geom)?;
    if let Some(axis) = opts.merit_axis {
        check_unit_axis(axis)?;
    }
    if opts.record_states {
        let required = (steps + 1)
            .checked_mul(16 * geom.dim() * geom.dim())
            .ok_or_else(|| Error::Numerical("state storage size overflow".into()))?;
        if required > opts.memory_budget_bytes {
            return Err(Error::MemoryBudget {
                required,
                budget: opts.memory_budget_bytes,
            });
        }
    }

    let frame = AlignedFrame::for_source(xi, geom);
    let ladder = ladder_table(geom);
    let mut current = frame.to_rotated(rho0.matrix());
    let mut scratch = current.clone();

    let mut l_exp = Vec::with_capacity(steps + 1);
    let mut r_series = Vec::with_capacity(steps + 1);
    let mut theta_series = Vec::with_capacity(steps + 1);
    let mut merit = opts.merit_axis.map(|_| Vec::with_capacity(steps + 1));
    let mut states: Option<Vec<DensityMatrix>> =
        opts.record_states.then(|| Vec::with_capacity(steps + 1));

    for t in 0..=steps {
        if t > 0 {
            polarized_step_into(&current, &mut scratch, frame.s, geom, &ladder);
            std::mem::swap(&mut current, &mut scratch);
            let trace_error = (current.trace().re - 1.0).abs();
            if trace_error > tol::TRACE {
                return Err(Error::Numerical(format!(
                    "trace drifted by {trace_error:.3e} at step {t}"
                )));
            }
        }
        let stats = statistics_raw(&current, geom);
        let l_lab = frame.vector_to_lab(stats.l_exp);
        let scale = geom.ell() + 0.5;
        let transverse = (l_lab[0] * l_lab[0] + l_lab[1] * l_lab[1]).sqrt();
        let l_norm = (transverse * transverse + l_lab[2] * l_lab[2]).sqrt();
        l_exp.push(l_lab);
        r_series.push(l_norm / scale);
        theta_series.push(if l_norm < tol::DIRECTION {
            None
        } else {
            Some(transverse.atan2(l_lab[2]))
        });
        if let (Some(series), Some(axis)) = (merit.as_mut(), opts.merit_axis) {
            let n = [l_lab[0] / scale, l_lab[1] / scale, l_lab[2] / scale];
            series.push(0.5 * (1.0 + axis[0] * n[0] + axis[1] * n[1] + axis[2] * n[2]));
        }
        if let Some(states) = states.as_mut() {
            states.push(DensityMatrix::from_raw_unchecked(frame.to_lab(&current)));
        }
    }

    // Positivity is checked once at the end; per-step checks would dominate
    // the runtime with an O(d^3) eigendecomposition.
    let final_state = DensityMatrix::new(frame.to_lab(&current))?;
    Ok(TrajectoryRecord {
        l_exp,
        r: r_series,
        theta: theta_series,
        merit,
        states,
        final_state,
    })
}

pub(crate) fn check_unit_axis(axis: [f64; 3]) -> Result<()> {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if (norm - 1.0).abs() > tol::UNIT_AXIS {
        return Err(Error::InvalidParameter(format!(
            "measurement axis must be unit length, |n| = {norm}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use crate::spin::coherent_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn geom(twice_ell: u32) -> ReferenceGeometry {
        ReferenceGeometry::new(twice_ell).unwrap()
    }

    #[test]
    fn unpolarized_source_fixes_maximally_mixed() {
        let g = geom(5);
        let rho = DensityMatrix::maximally_mixed(g.dim());
        let out = apply_channel(&rho, &SourceState::unpolarized(), g).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), rho.matrix()) < 1e-14);
    }

    #[test]
    fn aligned_top_state_is_fixed_for_maximal_polarization() {
        let g = geom(4);
        let top = DensityMatrix::basis_state(g, g.dim() - 1);
        let out = apply_channel_polarized(&top, 0.5, g).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), top.matrix()) < 1e-14);
    }

    #[test]
    fn polarized_form_matches_brute_force_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for twice_ell in [1, 2, 3, 4] {
            let g = geom(twice_ell);
            for _ in 0..25 {
                let rho = sample::random_density_matrix(g, &mut rng);
                let s_z: f64 = rng.random_range(-0.5..0.5);
                let xi = SourceState::polarized_z(s_z).unwrap();
                let fast = apply_channel_polarized(&rho, s_z, g).unwrap();
                let oracle = brute_force_step(&rho, &xi, g).unwrap();
                assert!(
                    linalg::max_abs_diff(fast.matrix(), oracle.matrix()) < 1e-12,
                    "mismatch at twice_ell={twice_ell}, s_z={s_z}"
                );
            }
        }
    }

    #[test]
    fn all_forms_agree_for_tilted_sources() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for twice_ell in [2, 3] {
            let g = geom(twice_ell);
            for _ in 0..20 {
                let rho = sample::random_density_matrix(g, &mut rng);
                let xi = sample::random_source_state(&mut rng);
                let production = apply_channel(&rho, &xi, g).unwrap();
                let coupling = apply_channel_coupling_form(&rho, &xi, g).unwrap();
                let kraus = apply_channel_kraus(&rho, &xi, g).unwrap();
                let brute = brute_force_step(&rho, &xi, g).unwrap();
                for (a, b) in [
                    (&production, &brute),
                    (&coupling, &brute),
                    (&kraus, &brute),
                ] {
                    assert!(linalg::max_abs_diff(a.matrix(), b.matrix()) < 1e-11);
                }
            }
        }
    }

    #[test]
    fn brute_force_is_trace_preserving_and_covariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = geom(3);
        for _ in 0..10 {
            let rho = sample::random_density_matrix(g, &mut rng);
            let xi = sample::random_source_state(&mut rng);
            let out = brute_force_step(&rho, &xi, g).unwrap();
            assert!((out.trace() - 1.0).abs() < 1e-12);
        }
        // Rotational covariance for the unpolarized source: E(U rho U^dag)
        // = U E(rho) U^dag for a rotation about an arbitrary axis.
        let xi = SourceState::unpolarized();
        let rho = sample::random_density_matrix(g, &mut rng);
        let u = spin::rotation_z(g, 0.7) * spin::rotation_y(g, 1.1);
        let rotated_in = DensityMatrix::new(&u * rho.matrix() * u.adjoint()).unwrap();
        let lhs = brute_force_step(&rotated_in, &xi, g).unwrap();
        let rhs = &u * brute_force_step(&rho, &xi, g).unwrap().matrix() * u.adjoint();
        assert!(linalg::max_abs_diff(lhs.matrix(), &rhs) < 1e-10);
    }

    #[test]
    fn polarized_channel_commutes_with_z_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = geom(6);
        let rho = sample::random_density_matrix(g, &mut rng);
        let u = spin::rotation_z(g, 2.3);
        let rotated_in = DensityMatrix::new(&u * rho.matrix() * u.adjoint()).unwrap();
        let lhs = apply_channel_polarized(&rotated_in, 0.3, g).unwrap();
        let rhs = &u * apply_channel_polarized(&rho, 0.3, g).unwrap().matrix() * u.adjoint();
        assert!(linalg::max_abs_diff(lhs.matrix(), &rhs) < 1e-10);
    }

    #[test]
    fn diagonal_states_stay_diagonal() {
        let g = geom(8);
        let mut probs = vec![0.0; g.dim()];
        probs[2] = 0.25;
        probs[5] = 0.75;
        let rho = DensityMatrix::from_diagonal(&probs).unwrap();
        let out = apply_channel_polarized(&rho, 0.2, g).unwrap();
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                if i != j {
                    assert!(out.matrix()[(i, j)].norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn kraus_completeness_on_parameter_grid() {
        let g = geom(5);
        for s_idx in 0..5 {
            let s_z = -0.5 + 0.25 * s_idx as f64;
            for t_idx in 0..5 {
                let theta = PI * t_idx as f64 / 4.0;
                let set = kraus_operators(s_z, theta, g).unwrap();
                assert!(
                    set.completeness_residual() < 1e-10,
                    "residual too large at s_z={s_z}, theta={theta}"
                );
            }
        }
    }

    #[test]
    fn kraus_action_is_theta_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = geom(4);
        let rho = sample::random_density_matrix(g, &mut rng);
        let reference = apply_channel_polarized(&rho, 0.2, g).unwrap();
        for theta in [0.0, 0.4, 1.3, 2.9] {
            let set = kraus_operators(0.2, theta, g).unwrap();
            let out = set.apply(&rho).unwrap();
            assert!(linalg::max_abs_diff(out.matrix(), reference.matrix()) < 1e-10);
        }
    }

    #[test]
    fn kraus_reduces_to_operator_basis_at_origin() {
        // theta = 0, s = 0: operators proportional to {I, L_y, L_z, L_x}.
        let g = geom(3);
        let set = kraus_operators(0.0, 0.0, g).unwrap();
        let l = angular_momentum_ops(g);
        let d = g.dim() as f64;
        let norm = 1.0 / (d * 2.0f64.sqrt());
        let expect = [
            linalg::identity(g.dim()).scale((d * d + 1.0).sqrt() * norm),
            &l.ly * Complex64::new(0.0, 2.0 * norm),
            (&l.lz).scale(2.0 * norm),
            (&l.lx).scale(2.0 * norm),
        ];
        for (e, x) in set.operators().iter().zip(expect.iter()) {
            assert!(linalg::max_abs_diff(e, x) < 1e-14);
        }
    }

    #[test]
    fn iterate_zero_steps_reports_initial_statistics() {
        let g = geom(6);
        let rho = coherent_state(g, 0.8, 0.0);
        let record = iterate(&rho, &SourceState::unpolarized(), g, 0, &IterateOptions::default())
            .unwrap();
        assert_eq!(record.len(), 1);
        assert!((record.r[0] - g.twice_ell() as f64 / g.dim() as f64).abs() < 1e-10);
        assert!((record.theta[0].unwrap() - 0.8).abs() < 1e-10);
    }

    #[test]
    fn iterate_matches_repeated_single_steps_for_tilted_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let g = geom(3);
        let rho0 = sample::random_density_matrix(g, &mut rng);
        let xi = sample::random_source_state(&mut rng);
        let opts = IterateOptions { record_states: true, ..Default::default() };
        let record = iterate(&rho0, &xi, g, 8, &opts).unwrap();
        let states = record.states.as_ref().unwrap();

        let mut manual = rho0.clone();
        for t in 0..=8usize {
            assert!(
                linalg::max_abs_diff(states[t].matrix(), manual.matrix()) < 1e-10,
                "trajectory diverges from repeated apply_channel at step {t}"
            );
            let stats = spin::state_statistics(&manual, g).unwrap();
            for k in 0..3 {
                assert!((stats.l_exp[k] - record.l_exp[t][k]).abs() < 1e-10);
            }
            manual = apply_channel(&manual, &xi, g).unwrap();
        }
    }

    #[test]
    fn monotone_climb_toward_alignment_matches_markov_oracle() {
        // l = 1, maximally polarized source, start at the bottom: the three
        // populations follow the 3-state chain and <L_z> climbs to +1.
        let g = geom(2);
        let rho0 = DensityMatrix::basis_state(g, 0);
        let xi = SourceState::polarized_z(0.5).unwrap();
        let record = iterate(&rho0, &xi, g, 60, &IterateOptions::default()).unwrap();
        for t in 1..record.len() {
            assert!(record.l_exp[t][2] > record.l_exp[t - 1][2] - 1e-14);
        }
        assert!((record.l_exp[60][2] - 1.0).abs() < 2e-2);

        // Hand-iterated 3-state chain (Eq.-(10) probabilities at s = 1/2).
        let up0 = 0.5 * (1.0 - (1.0f64 / 3.0).powi(2)); // m=-1 -> 0
        let up1 = 0.5 * (1.0 - (1.0f64 / 3.0).powi(2)); // m=0 -> +1
        let mut p = [1.0, 0.0, 0.0];
        for _ in 0..60 {
            let flow0 = up0 * p[0];
            let flow1 = up1 * p[1];
            p = [p[0] - flow0, p[1] + flow0 - flow1, p[2] + flow1];
        }
        let lz = -p[0] + p[2];
        assert!((record.l_exp[60][2] - lz).abs() < 1e-12);
    }

    #[test]
    fn coherence_weights_are_subnormalized() {
        // For m != m' the three weights moving a coherence block sum to
        // strictly less than 1; saturation happens only on the diagonal.
        let g = geom(9);
        let d = g.dim();
        let s: f64 = 0.2;
        let dd = (d * d) as f64;
        let ladder = ladder_table(g);
        for i in 0..d {
            for j in 0..d {
                let stay = (0.5 + (1.0 - 4.0 * s * s) / (2.0 * dd)
                    + 2.0 / dd * (g.m_value(i) + s) * (g.m_value(j) + s))
                    .abs();
                let up = if i + 1 < d && j + 1 < d {
                    (1.0 + 2.0 * s) / dd * ladder[i] * ladder[j]
                } else {
                    0.0
                };
                let down = if i > 0 && j > 0 {
                    (1.0 - 2.0 * s) / dd * ladder[i - 1] * ladder[j - 1]
                } else {
                    0.0
                };
                let total = stay + up + down;
                if i == j {
                    assert!((total - 1.0).abs() < 1e-14, "diagonal weights sum to 1");
                } else {
                    assert!(total < 1.0 - 1e-12, "({i},{j}): weight {total} not subnormalized");
                }
            }
        }
    }

    #[test]
    fn off_diagonal_blocks_decay_to_zero() {
        // Coherences are carried by subnormalized weights: iterating on a
        // single off-diagonal block must send its norm to zero.
        let g = geom(4);
        let mut block = CMatrix::zeros(g.dim(), g.dim());
        block[(1, 3)] = Complex64::new(1.0, 0.0);
        let mut norms = Vec::new();
        for _ in 0..200 {
            norms.push(linalg::max_abs(&block));
            block = apply_channel_polarized_matrix(&block, 0.2, g).unwrap();
        }
        assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(norms.last().unwrap() < &1e-6);
    }

    #[test]
    fn memory_budget_is_enforced() {
        let g = geom(40);
        let rho = coherent_state(g, 0.3, 0.0);
        let opts = IterateOptions {
            record_states: true,
            memory_budget_bytes: 1024,
            ..Default::default()
        };
        match iterate(&rho, &SourceState::unpolarized(), g, 100, &opts) {
            Err(Error::MemoryBudget { required, budget }) => {
                assert!(required > budget);
            }
            other => panic!("expected memory budget error, got {other:?}"),
        }
    }

    #[test]
    fn joint_angular_momentum_is_conserved_per_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = geom(3);
        let l = angular_momentum_ops(g);
        let s = spin::spin_half_ops();
        let projectors = measurement::total_projectors(g);
        for _ in 0..10 {
            let rho = sample::random_density_matrix(g, &mut rng);
            let xi = sample::random_source_state(&mut rng);
            let joint = rho.matrix().kronecker(xi.density_matrix().matrix());
            let after = &projectors.pi_plus * &joint * &projectors.pi_plus
                + &projectors.pi_minus * &joint * &projectors.pi_minus;
            let id2 = linalg::identity(2);
            let idd = linalg::identity(g.dim());
            for (li, si, bloch) in [
                (&l.lx, &s.lx, xi.bloch()[0]),
                (&l.ly, &s.ly, xi.bloch()[1]),
                (&l.lz, &s.lz, xi.bloch()[2]),
            ] {
                let j_op = li.kronecker(&id2) + idd.kronecker(si);
                let before: Complex64 = (&joint * &j_op).trace();
                let conserved: Complex64 = (&after * &j_op).trace();
                assert!((before - conserved).norm() < 1e-10);
                let expected = crate::spin::state_statistics(&rho, g).unwrap();
                let li_exp = match () {
                    _ if std::ptr::eq(li, &l.lx) => expected.l_exp[0],
                    _ if std::ptr::eq(li, &l.ly) => expected.l_exp[1],
                    _ => expected.l_exp[2],
                };
                assert!((before.re - (li_exp + bloch)).abs() < 1e-10);
            }
        }
    }
}
