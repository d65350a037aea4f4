//! Large-l equations of motion for the reference direction.
//!
//! To first order in 1/l the channel only rotates the polarization toward
//! the source axis:
//!
//!   d theta / dt = -r(t) (<S_z>/l) sin theta,
//!
//! with one time unit per measured particle. Under the r(t) = 1 assumption
//! the flow integrates to
//!
//!   theta_SC(t) = 2 arccot( cot(theta_0 / 2) exp(<S_z> t / l) ).

use num_complex::Complex64;

use crate::channel::{self, IterateOptions};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::spin::{angular_momentum_ops, coherent_state, DensityMatrix, ReferenceGeometry, SourceState};
use crate::tol;

/// Sub-steps per measured particle used by the default integrator. Chosen
/// so the forward-Euler trajectory stays within ~1e-5 radians of the exact
/// flow for the parameter ranges of interest (|s| <= 1/2, l >= 20).
pub const DEFAULT_SUBSTEPS: u32 = 256;

/// Parameters of a semiclassical trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalParams {
    pub s_z: f64,
    pub ell: f64,
    pub theta0: f64,
    /// Polarization length fed to the flow; the closed form assumes 1.
    pub r_assumption: f64,
}

impl SemiclassicalParams {
    pub fn new(s_z: f64, ell: f64, theta0: f64) -> Result<Self> {
        if s_z.abs() > 0.5 + tol::BLOCH_BALL {
            return Err(Error::InvalidParameter(format!("|<S_z>| = {} exceeds 1/2", s_z.abs())));
        }
        if ell <= 0.0 {
            return Err(Error::InvalidParameter(format!("ell must be positive, got {ell}")));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta0) {
            return Err(Error::InvalidParameter(format!(
                "theta0 must lie in [0, pi], got {theta0}"
            )));
        }
        Ok(Self { s_z, ell, theta0, r_assumption: 1.0 })
    }

    pub fn with_r_assumption(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "r_assumption must lie in (0, 1], got {r}"
            )));
        }
        self.r_assumption = r;
        Ok(self)
    }
}

/// Right-hand side of the angle equation: -r (s_z / l) sin theta, per step.
pub fn dtheta_dt(theta: f64, r: f64, s_z: f64, ell: f64) -> f64 {
    -r * s_z / ell * theta.sin()
}

/// Closed-form trajectory under the r = 1 assumption. The poles theta_0 = 0
/// and pi are fixed points and return constant trajectories.
pub fn theta_closed_form(params: &SemiclassicalParams, t: f64) -> f64 {
    if params.theta0 <= 0.0 {
        return 0.0;
    }
    if params.theta0 >= std::f64::consts::PI {
        return std::f64::consts::PI;
    }
    let half = params.theta0 / 2.0;
    let cot0 = half.cos() / half.sin();
    // arccot on (0, inf) via atan2; the growth factor may overflow to
    // +inf for huge t, where atan2 correctly returns 0.
    2.0 * f64::atan2(1.0, cot0 * (params.s_z * t / params.ell).exp())
}

/// Forward integration with the default sub-step count.
pub fn integrate_theta(params: &SemiclassicalParams, steps: usize) -> Vec<f64> {
    integrate_theta_substeps(params, steps, DEFAULT_SUBSTEPS)
}

/// Forward Euler with `substeps` slices per measured particle. Returns
/// theta at the integer times 0..=steps.
pub fn integrate_theta_substeps(
    params: &SemiclassicalParams,
    steps: usize,
    substeps: u32,
) -> Vec<f64> {
    let substeps = substeps.max(1);
    let h = 1.0 / substeps as f64;
    let mut theta = params.theta0;
    let mut series = Vec::with_capacity(steps + 1);
    series.push(theta);
    for _ in 0..steps {
        for _ in 0..substeps {
            theta += h * dtheta_dt(theta, params.r_assumption, params.s_z, params.ell);
        }
        series.push(theta);
    }
    series
}

/// Integration with the measured polarization fed back in: r is held at
/// `r_series[t]` during the step t -> t+1. Diagnostic companion to
/// `compare_exact_semiclassical`.
pub fn integrate_theta_with_polarization(
    params: &SemiclassicalParams,
    r_series: &[f64],
) -> Vec<f64> {
    let h = 1.0 / DEFAULT_SUBSTEPS as f64;
    let mut theta = params.theta0;
    let mut series = Vec::with_capacity(r_series.len() + 1);
    series.push(theta);
    for &r in r_series {
        for _ in 0..DEFAULT_SUBSTEPS {
            theta += h * dtheta_dt(theta, r, params.s_z, params.ell);
        }
        series.push(theta);
    }
    series
}

/// First-order expansion of the channel about a polarized state:
///
///   E(rho) ~ rho + i (r <S_z>/l) sin(theta) [L_y, rho].
///
/// Returns the raw matrix: it is Hermitian with unit trace, but positive
/// only to the order of the expansion, so it is a diagnostic object rather
/// than a state.
pub fn first_order_channel(
    rho: &DensityMatrix,
    r: f64,
    theta: f64,
    s_z: f64,
    geom: ReferenceGeometry,
) -> Result<CMatrix> {
    if rho.dim() != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), found: rho.dim() });
    }
    let ly = angular_momentum_ops(geom).ly;
    let commutator = &ly * rho.matrix() - rho.matrix() * &ly;
    let coefficient = Complex64::new(0.0, r * s_z / geom.ell() * theta.sin());
    Ok(rho.matrix() + commutator * coefficient)
}

/// Exact channel trajectory against the closed-form prediction.
#[derive(Debug, Clone)]
pub struct ExactVsSemiclassical {
    /// Polar angle of <L>(t) under the exact channel.
    pub theta_exact: Vec<f64>,
    /// theta_SC(t) at the same times.
    pub theta_sc: Vec<f64>,
    /// Exact polarization length r(t).
    pub r_exact: Vec<f64>,
    /// max_t |theta_exact - theta_sc|.
    pub max_deviation: f64,
    /// min_t r(t).
    pub min_r: f64,
}

/// Run the exact channel from the coherent state at `theta0` against a
/// z-polarized source and compare with the semiclassical solution.
pub fn compare_exact_semiclassical(
    geom: ReferenceGeometry,
    theta0: f64,
    s_z: f64,
    steps: usize,
) -> Result<ExactVsSemiclassical> {
    if theta0 <= 0.0 || theta0 >= std::f64::consts::PI {
        return Err(Error::InvalidParameter(
            "theta0 must lie strictly between 0 and pi for a meaningful comparison".into(),
        ));
    }
    let params = SemiclassicalParams::new(s_z, geom.ell(), theta0)?;
    let rho0 = coherent_state(geom, theta0, 0.0);
    let xi = SourceState::polarized_z(s_z)?;
    let record = channel::iterate(&rho0, &xi, geom, steps, &IterateOptions::default())?;

    let mut theta_exact = Vec::with_capacity(steps + 1);
    for (t, angle) in record.theta.iter().enumerate() {
        match angle {
            Some(value) => theta_exact.push(*value),
            None => {
                return Err(Error::Numerical(format!(
                    "reference direction became undefined at step {t}"
                )))
            }
        }
    }
    let theta_sc: Vec<f64> =
        (0..=steps).map(|t| theta_closed_form(&params, t as f64)).collect();
    let max_deviation = theta_exact
        .iter()
        .zip(theta_sc.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let min_r = record.r.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ExactVsSemiclassical {
        theta_exact,
        theta_sc,
        r_exact: record.r,
        max_deviation,
        min_r,
    })
}
