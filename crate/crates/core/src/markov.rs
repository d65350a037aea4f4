//! Birth-death Markov reduction of the diagonal channel dynamics.
//!
//! On states diagonal in the L_z basis the channel moves population only
//! between neighboring levels, with conditional probabilities
//!
//!   P(m+-1 | m) = (1 +- 2<S_z>)/4 * (1 - ((2m +- 1)/d)^2),
//!
//! and P(m|m) fixed by column normalization. This module builds that chain
//! and analyzes it: stationary distribution, spectral gap / relaxation time,
//! and the hitting times that bound the longevity of the reference.

use nalgebra::DMatrix;

use crate::channel;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::spin::{DensityMatrix, ReferenceGeometry};

mod tridiag;

/// Column-stochastic tridiagonal chain over m = -l..l (increasing index).
#[derive(Debug, Clone)]
pub struct MarkovChain {
    geom: ReferenceGeometry,
    s_z: f64,
    /// p[(to, from)]; columns sum to 1.
    p: DMatrix<f64>,
}

/// Build the transition matrix from the conditional-probability formula.
pub fn transition_matrix(geom: ReferenceGeometry, s_z: f64) -> Result<MarkovChain> {
    if s_z.abs() > 0.5 + crate::tol::BLOCH_BALL {
        return Err(Error::InvalidParameter(format!(
            "|<S_z>| = {} exceeds 1/2",
            s_z.abs()
        )));
    }
    let d = geom.dim();
    let mut p = DMatrix::zeros(d, d);
    for from in 0..d {
        let m = geom.m_value(from);
        let up = if from + 1 < d { hop_probability(geom, s_z, m, 1.0) } else { 0.0 };
        let down = if from > 0 { hop_probability(geom, s_z, m, -1.0) } else { 0.0 };
        if from + 1 < d {
            p[(from + 1, from)] = up;
        }
        if from > 0 {
            p[(from - 1, from)] = down;
        }
        p[(from, from)] = 1.0 - up - down;
    }
    Ok(MarkovChain { geom, s_z, p })
}

/// P(m + sign | m) per the closed formula; `sign` is +-1.
fn hop_probability(geom: ReferenceGeometry, s_z: f64, m: f64, sign: f64) -> f64 {
    let d = geom.dim() as f64;
    let boundary = (2.0 * m + sign) / d;
    (1.0 + sign * 2.0 * s_z) / 4.0 * (1.0 - boundary * boundary)
}

/// Spectral data of the symmetrized chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGap {
    /// Delta = 1 - lambda_2.
    pub gap: f64,
    /// Second-largest eigenvalue of W.
    pub lambda2: f64,
    /// 1 / Delta.
    pub relaxation_time: f64,
}

impl MarkovChain {
    pub fn geom(&self) -> ReferenceGeometry {
        self.geom
    }

    pub fn s_z(&self) -> f64 {
        self.s_z
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// One chain step on a population vector: p' = P p.
    pub fn step_distribution(&self, populations: &[f64]) -> Vec<f64> {
        let d = self.geom.dim();
        assert_eq!(populations.len(), d);
        let mut out = vec![0.0; d];
        for from in 0..d {
            let weight = populations[from];
            if weight == 0.0 {
                continue;
            }
            let lo = from.saturating_sub(1);
            let hi = (from + 1).min(d - 1);
            for to in lo..=hi {
                out[to] += self.p[(to, from)] * weight;
            }
        }
        out
    }

    /// Stationary distribution fixed by detailed balance:
    /// P_{m+1}/P_m = P(m+1|m) / P(m|m+1), accumulated in the log domain.
    ///
    /// At |<S_z>| = 1/2 the chain is absorbing and the point mass at the
    /// corresponding end is returned.
    pub fn stationary_distribution(&self) -> Vec<f64> {
        let d = self.geom.dim();
        if (self.s_z.abs() - 0.5).abs() <= f64::EPSILON {
            let mut point = vec![0.0; d];
            let index = if self.s_z > 0.0 { d - 1 } else { 0 };
            point[index] = 1.0;
            return point;
        }
        let mut log_weights = vec![0.0f64; d];
        for i in 0..d - 1 {
            let ratio = self.p[(i + 1, i)] / self.p[(i, i + 1)];
            log_weights[i + 1] = log_weights[i] + ratio.ln();
        }
        let max = log_weights.iter().cloned().fold(f64::MIN, f64::max);
        let mut weights: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        weights
    }

    /// Symmetrized form W = D^{-1} P D with D = diag(sqrt(P_m)), built from
    /// log-stationary differences so extreme polarizations cannot overflow.
    pub fn symmetrized(&self) -> Result<DMatrix<f64>> {
        if (self.s_z.abs() - 0.5).abs() <= f64::EPSILON {
            return Err(Error::DegenerateChain(
                "|<S_z>| = 1/2 gives an absorbing chain with no reversible form".into(),
            ));
        }
        let d = self.geom.dim();
        // log P_{m+1} - log P_m, from the detailed-balance ratio.
        let half_log_ratio: Vec<f64> = (0..d - 1)
            .map(|i| 0.5 * (self.p[(i + 1, i)] / self.p[(i, i + 1)]).ln())
            .collect();
        let mut w = DMatrix::zeros(d, d);
        for i in 0..d {
            w[(i, i)] = self.p[(i, i)];
        }
        for i in 0..d - 1 {
            // W_{i+1,i} = P(i+1|i) exp((log pi_i - log pi_{i+1})/2), etc.
            w[(i + 1, i)] = self.p[(i + 1, i)] * (-half_log_ratio[i]).exp();
            w[(i, i + 1)] = self.p[(i, i + 1)] * half_log_ratio[i].exp();
        }
        Ok(w)
    }

    /// Spectral gap of W and the relaxation time 1/gap.
    ///
    /// The top two eigenvalues come from a dense symmetric solve at small
    /// dimension and from Sturm bisection on the tridiagonal bands above
    /// d = 100, where the dense solver's accuracy at small gaps degrades.
    pub fn spectral_gap(&self) -> Result<SpectralGap> {
        let w = self.symmetrized()?;
        let d = self.geom.dim();
        let (lambda1, lambda2) = if d > 100 {
            let diagonal: Vec<f64> = (0..d).map(|i| w[(i, i)]).collect();
            let off: Vec<f64> = (0..d - 1).map(|i| 0.5 * (w[(i + 1, i)] + w[(i, i + 1)])).collect();
            let top = tridiag::largest_eigenvalues(&diagonal, &off, 2);
            (top[0], top[1])
        } else {
            let symmetric = CMatrix::from_fn(d, d, |i, j| {
                num_complex::Complex64::new(0.5 * (w[(i, j)] + w[(j, i)]), 0.0)
            });
            let values = crate::linalg::hermitian_eigenvalues(&symmetric);
            (values[d - 1], values[d - 2])
        };
        if (lambda1 - 1.0).abs() > 1e-8 {
            return Err(Error::Numerical(format!(
                "leading eigenvalue of W is {lambda1}, expected 1"
            )));
        }
        let gap = 1.0 - lambda2;
        Ok(SpectralGap { gap, lambda2, relaxation_time: 1.0 / gap })
    }
}

/// Max deviation between the channel acting on basis states |m><m| and the
/// corresponding column of the chain. A cross-module consistency check.
pub fn channel_diagonal_agreement(chain: &MarkovChain) -> f64 {
    let geom = chain.geom;
    let d = geom.dim();
    let mut worst = 0.0f64;
    for from in 0..d {
        let basis = DensityMatrix::basis_state(geom, from);
        let stepped =
            channel::apply_channel_polarized_matrix(basis.matrix(), chain.s_z, geom)
                .expect("valid chain parameters");
        for to in 0..d {
            let from_channel = stepped[(to, to)].re;
            worst = worst.max((from_channel - chain.p[(to, from)]).abs());
        }
    }
    worst
}

/// Expected time for the maximally polarized chain to walk from |l,-l> to
/// |l,l>, with the closed-form approximation d ln(d-1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiparallelHittingTime {
    /// Sum of expected waiting times, sum_m 2 / (1 - ((2m+1)/d)^2).
    pub exact_sum: f64,
    /// d ln(d - 1).
    pub closed_form: f64,
}

/// Hitting time for the antiparallel worst case (<S_z> = 1/2, start at the
/// bottom state). The chain is a pure birth process there, so the expected
/// waiting time at level m is 1 / P(m+1|m).
pub fn hitting_time_antiparallel(geom: ReferenceGeometry) -> AntiparallelHittingTime {
    let d = geom.dim() as f64;
    let mut exact_sum = 0.0;
    for i in 0..geom.dim() - 1 {
        let y = (2.0 * geom.m_value(i) + 1.0) / d;
        exact_sum += 2.0 / (1.0 - y * y);
    }
    AntiparallelHittingTime { exact_sum, closed_form: d * (d - 1.0).ln() }
}

/// Epsilon-relaxed hitting data: interior sum, its closed form, and the
/// empirically iterated crossing time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonHittingTime {
    /// Waiting-time sum restricted to |(2m+1)/d| <= 1 - epsilon.
    pub truncated_sum: f64,
    /// d ln(2/epsilon - 1).
    pub closed_form: f64,
    /// Steps for <L_z>/l to cross 1 - epsilon under chain iteration from a
    /// state with <L_z>/l <= -(1 - epsilon).
    pub empirical_steps: u64,
}

/// Relaxed hitting time: instead of reaching the top state exactly, ask for
/// <L_z>/l >= 1 - epsilon starting from <L_z>/l <= -(1 - epsilon), under the
/// maximally polarized chain. Linear in d, with no log(d) factor.
pub fn hitting_time_epsilon(geom: ReferenceGeometry, epsilon: f64) -> Result<EpsilonHittingTime> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let d = geom.dim() as f64;
    let mut truncated_sum = 0.0;
    for i in 0..geom.dim() - 1 {
        let y = (2.0 * geom.m_value(i) + 1.0) / d;
        if y.abs() <= 1.0 - epsilon {
            truncated_sum += 2.0 / (1.0 - y * y);
        }
    }
    let closed_form = d * (2.0 / epsilon - 1.0).ln();

    let chain = transition_matrix(geom, 0.5)?;
    let ell = geom.ell();
    let target = (1.0 - epsilon) * ell;
    // Start at the greatest level with m <= -(1 - epsilon) l.
    let start = (0..geom.dim())
        .rev()
        .find(|&i| geom.m_value(i) <= -target)
        .ok_or_else(|| Error::InvalidParameter("no level satisfies the start condition".into()))?;
    let mut populations = vec![0.0; geom.dim()];
    populations[start] = 1.0;
    let mut mean = geom.m_value(start);
    let mut steps = 0u64;
    let cap = (100.0 * closed_form).max(10_000.0) as u64;
    while mean < target {
        populations = chain.step_distribution(&populations);
        steps += 1;
        mean = populations
            .iter()
            .enumerate()
            .map(|(i, p)| geom.m_value(i) * p)
            .sum();
        if steps > cap {
            return Err(Error::Numerical(format!(
                "epsilon-hitting iteration did not cross within {cap} steps"
            )));
        }
    }
    Ok(EpsilonHittingTime { truncated_sum, closed_form, empirical_steps: steps })
}

/// Which effect limits the longevity of the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LongevityRegime {
    /// |<S_z>| < 1/l: angular-momentum fluctuations dominate; bound ~ l^2.
    FluctuationDominated,
    /// |<S_z>| >= 1/l: drift dominates; bound ~ l / (2 |<S_z>|).
    DriftDominated,
}

/// Order-of-magnitude lower bound on the longevity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongevityBound {
    pub steps: f64,
    pub regime: LongevityRegime,
}

/// Conservation-law estimate of the minimum number of measured particles
/// needed to disturb the reference appreciably.
pub fn longevity_lower_bound(geom: ReferenceGeometry, s_z: f64) -> LongevityBound {
    let ell = geom.ell();
    if s_z.abs() < 1.0 / ell {
        LongevityBound { steps: ell * ell, regime: LongevityRegime::FluctuationDominated }
    } else {
        LongevityBound { steps: ell / (2.0 * s_z.abs()), regime: LongevityRegime::DriftDominated }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(twice_ell: u32) -> ReferenceGeometry {
        ReferenceGeometry::new(twice_ell).unwrap()
    }

    #[test]
    fn columns_sum_to_one_and_are_tridiagonal() {
        for (twice_ell, s_z) in [(2u32, 0.5), (5, -0.3), (16, 0.0), (40, 0.25)] {
            let chain = transition_matrix(geom(twice_ell), s_z).unwrap();
            let d = chain.geom().dim();
            for from in 0..d {
                let column_sum: f64 = (0..d).map(|to| chain.matrix()[(to, from)]).sum();
                assert!((column_sum - 1.0).abs() < 1e-14);
                for to in 0..d {
                    let entry = chain.matrix()[(to, from)];
                    assert!((0.0..=1.0).contains(&entry));
                    if to.abs_diff(from) > 1 {
                        assert_eq!(entry, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_hops_vanish_exactly() {
        let chain = transition_matrix(geom(14), 0.37).unwrap();
        let d = chain.geom().dim();
        // The factor (1 - ((2m+1)/d)^2) is exactly zero at m = l, hence no
        // probability ever leaves the ladder.
        assert_eq!(hop_probability(chain.geom(), 0.37, chain.geom().ell(), 1.0), 0.0);
        assert_eq!(hop_probability(chain.geom(), 0.37, -chain.geom().ell(), -1.0), 0.0);
        assert_eq!(chain.matrix()[(d - 1, d - 1)] + chain.matrix()[(d - 2, d - 1)], 1.0);
    }

    #[test]
    fn spec_example_values_at_spin_one() {
        // l = 1, s = 1/2: P(0|-1) = (1/2)(1 - 1/9) = 4/9.
        let chain = transition_matrix(geom(2), 0.5).unwrap();
        assert!((chain.matrix()[(1, 0)] - 4.0 / 9.0).abs() < 1e-15);
        // No downward hops at maximal polarization.
        assert_eq!(chain.matrix()[(0, 1)], 0.0);
    }

    #[test]
    fn symmetric_at_zero_polarization() {
        let chain = transition_matrix(geom(9), 0.0).unwrap();
        let d = chain.geom().dim();
        for i in 0..d - 1 {
            assert!((chain.matrix()[(i + 1, i)] - chain.matrix()[(i, i + 1)]).abs() < 1e-15);
            // Mirror symmetry under m -> -m.
            let mirror = chain.matrix()[(d - 1 - i, d - 2 - i)];
            assert!((chain.matrix()[(i, i + 1)] - mirror).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_action_of_channel_matches_chain() {
        for twice_ell in [1u32, 2, 5, 10] {
            for s_z in [-0.5, -0.2, 0.0, 0.31, 0.5] {
                let chain = transition_matrix(geom(twice_ell), s_z).unwrap();
                assert!(channel_diagonal_agreement(&chain) < 1e-12);
            }
        }
    }

    #[test]
    fn absorbing_columns_at_maximal_polarization() {
        let up = transition_matrix(geom(6), 0.5).unwrap();
        let d = up.geom().dim();
        assert_eq!(up.matrix()[(d - 1, d - 1)], 1.0);
        let down = transition_matrix(geom(6), -0.5).unwrap();
        assert_eq!(down.matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn stationary_distribution_is_geometric() {
        // s = 1/4: ratio (1+1/2)/(1-1/2) = 3 between neighbors.
        let chain = transition_matrix(geom(2), 0.25).unwrap();
        let pi = chain.stationary_distribution();
        assert!((pi[1] / pi[0] - 3.0).abs() < 1e-12);
        assert!((pi[2] / pi[1] - 3.0).abs() < 1e-12);
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-14);

        let uniform = transition_matrix(geom(7), 0.0).unwrap().stationary_distribution();
        for p in &uniform {
            assert!((p - 1.0 / 8.0).abs() < 1e-14);
        }

        let point = transition_matrix(geom(5), 0.5).unwrap().stationary_distribution();
        assert_eq!(point[5], 1.0);
    }

    #[test]
    fn stationary_matches_power_iteration_oracle() {
        for (twice_ell, s_z) in [(8u32, 0.2), (15, -0.35), (20, 0.05)] {
            let chain = transition_matrix(geom(twice_ell), s_z).unwrap();
            let pi = chain.stationary_distribution();
            // Independent oracle: run the chain itself to convergence.
            let d = chain.geom().dim();
            let mut p = vec![1.0 / d as f64; d];
            for _ in 0..200_000 {
                p = chain.step_distribution(&p);
            }
            let tv: f64 =
                0.5 * pi.iter().zip(p.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>();
            assert!(tv < 1e-12, "TV distance {tv} at twice_ell={twice_ell}, s_z={s_z}");
        }
    }

    #[test]
    fn detailed_balance_holds() {
        let chain = transition_matrix(geom(17), 0.22).unwrap();
        let pi = chain.stationary_distribution();
        for i in 0..chain.geom().dim() - 1 {
            let forward = pi[i] * chain.matrix()[(i + 1, i)];
            let backward = pi[i + 1] * chain.matrix()[(i, i + 1)];
            assert!((forward - backward).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetrized_form_is_symmetric_with_unit_top_eigenvalue() {
        let chain = transition_matrix(geom(30), 0.15).unwrap();
        let w = chain.symmetrized().unwrap();
        let d = chain.geom().dim();
        for i in 0..d {
            for j in 0..d {
                assert!((w[(i, j)] - w[(j, i)]).abs() < 1e-12);
            }
        }
        let gap = chain.spectral_gap().unwrap();
        assert!(gap.gap > 0.0);
        // Dense route: check every eigenvalue lies in [-1, 1].
        let symmetric = CMatrix::from_fn(d, d, |i, j| {
            num_complex::Complex64::new(0.5 * (w[(i, j)] + w[(j, i)]), 0.0)
        });
        let values = crate::linalg::hermitian_eigenvalues(&symmetric);
        assert!((values[d - 1] - 1.0).abs() < 1e-12);
        assert!(values[0] >= -1.0 - 1e-12);
    }

    #[test]
    fn degenerate_chain_has_no_gap() {
        let chain = transition_matrix(geom(4), 0.5).unwrap();
        assert!(matches!(chain.spectral_gap(), Err(Error::DegenerateChain(_))));
    }

    #[test]
    fn relaxation_time_regression_and_slope() {
        // Frozen value cross-checked against an independent dense eigensolver:
        // at l = 20, s = 0.1 the true relaxation time is 123.79, which sits
        // 24% above the asymptotic estimate l/(2s) = 100. The estimate is
        // reached from above as s*l grows; what holds accurately at these
        // sizes is the slope of 1/gap in l.
        let chain = transition_matrix(geom(40), 0.1).unwrap();
        let gap = chain.spectral_gap().unwrap();
        assert!((gap.relaxation_time - 123.79298).abs() < 1e-3, "1/gap = {}", gap.relaxation_time);

        // Least-squares slope of 1/gap over l in {20, 40, 80} vs 1/(2s).
        for s_z in [0.1, 0.2, 0.3] {
            let ells = [20.0, 40.0, 80.0];
            let times: Vec<f64> = [40u32, 80, 160]
                .iter()
                .map(|&te| transition_matrix(geom(te), s_z).unwrap().spectral_gap().unwrap().relaxation_time)
                .collect();
            let mean_x = ells.iter().sum::<f64>() / 3.0;
            let mean_y = times.iter().sum::<f64>() / 3.0;
            let slope: f64 = ells
                .iter()
                .zip(times.iter())
                .map(|(x, y)| (x - mean_x) * (y - mean_y))
                .sum::<f64>()
                / ells.iter().map(|x| (x - mean_x) * (x - mean_x)).sum::<f64>();
            let expect = 1.0 / (2.0 * s_z);
            assert!(
                ((slope - expect) / expect).abs() < 0.10,
                "s_z={s_z}: slope {slope} vs {expect}"
            );
        }
    }

    #[test]
    fn sturm_and_dense_eigenvalues_agree() {
        // d = 121 crosses the tridiagonal threshold; force both routes.
        let chain = transition_matrix(geom(120), 0.12).unwrap();
        let w = chain.symmetrized().unwrap();
        let d = chain.geom().dim();
        let diagonal: Vec<f64> = (0..d).map(|i| w[(i, i)]).collect();
        let off: Vec<f64> = (0..d - 1).map(|i| 0.5 * (w[(i + 1, i)] + w[(i, i + 1)])).collect();
        let sturm = tridiag::largest_eigenvalues(&diagonal, &off, 2);
        let symmetric = CMatrix::from_fn(d, d, |i, j| {
            num_complex::Complex64::new(0.5 * (w[(i, j)] + w[(j, i)]), 0.0)
        });
        let dense = crate::linalg::hermitian_eigenvalues(&symmetric);
        assert!((sturm[0] - dense[d - 1]).abs() < 1e-10);
        assert!((sturm[1] - dense[d - 2]).abs() < 1e-10);
    }

    #[test]
    fn empirical_relaxation_rate_matches_lambda2() {
        let chain = transition_matrix(geom(20), 0.2).unwrap();
        let gap = chain.spectral_gap().unwrap();
        let pi = chain.stationary_distribution();
        let d = chain.geom().dim();
        let mut p = vec![0.0; d];
        p[d / 2] = 1.0;
        let tv = |p: &[f64]| -> f64 {
            0.5 * p.iter().zip(pi.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>()
        };
        // Late-time decay per step approaches lambda_2.
        let settle = (8.0 * gap.relaxation_time) as usize;
        for _ in 0..settle {
            p = chain.step_distribution(&p);
        }
        let before = tv(&p);
        let window = (2.0 * gap.relaxation_time) as usize;
        for _ in 0..window {
            p = chain.step_distribution(&p);
        }
        let after = tv(&p);
        let measured = (after / before).powf(1.0 / window as f64);
        assert!(
            (measured - gap.lambda2).abs() / (1.0 - gap.lambda2) < 0.10,
            "decay rate {measured} vs lambda2 {}",
            gap.lambda2
        );
    }

    #[test]
    fn antiparallel_hitting_time_values() {
        // l = 1: two terms of 9/4 each.
        let t = hitting_time_antiparallel(geom(2));
        assert!((t.exact_sum - 4.5).abs() < 1e-12);

        // Terms pair up under m -> -m-1.
        let g = geom(11);
        let d = g.dim() as f64;
        let terms: Vec<f64> = (0..g.dim() - 1)
            .map(|i| {
                let y = (2.0 * g.m_value(i) + 1.0) / d;
                2.0 / (1.0 - y * y)
            })
            .collect();
        let n = terms.len();
        for i in 0..n / 2 {
            assert!((terms[i] - terms[n - 1 - i]).abs() < 1e-12);
        }

        // d = 161: frozen regression value, cross-checked against an
        // independent implementation. The closed form undershoots the sum
        // by 11% here and converges from above only slowly in d.
        let large = hitting_time_antiparallel(geom(160));
        let ratio = large.exact_sum / large.closed_form;
        assert!((ratio - 1.11434828).abs() < 1e-6, "ratio {ratio}");
        let ratios: Vec<f64> = [40u32, 80, 160, 400]
            .iter()
            .map(|&te| {
                let t = hitting_time_antiparallel(geom(te));
                t.exact_sum / t.closed_form
            })
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "approach to 1 is monotone: {ratios:?}");
        assert!(ratios.iter().all(|r| *r > 1.0));
    }

    #[test]
    fn epsilon_hitting_time_reduces_and_scales() {
        let g = geom(80); // l = 40
        let out = hitting_time_epsilon(g, 0.2).unwrap();
        let d = g.dim() as f64;
        assert!((out.closed_form - d * 9.0f64.ln()).abs() < 1e-9);
        // The empirical crossing lands within 20% of the closed form.
        let rel = (out.empirical_steps as f64 - out.closed_form).abs() / out.closed_form;
        assert!(rel < 0.2, "empirical {} vs closed {}", out.empirical_steps, out.closed_form);

        // epsilon = 1 - (2l-1)/d sets the window edge exactly on the extreme
        // terms of the antiparallel sum, so nothing is dropped.
        let small = geom(6);
        let eps = 1.0 - (small.twice_ell() as f64 - 1.0) / small.dim() as f64;
        let trunc = hitting_time_epsilon(small, eps).unwrap();
        let full = hitting_time_antiparallel(small);
        assert!((trunc.truncated_sum - full.exact_sum).abs() < 1e-12);

        assert!(hitting_time_epsilon(g, 0.0).is_err());
        assert!(hitting_time_epsilon(g, 1.0).is_err());
    }

    #[test]
    fn longevity_bound_regimes() {
        let g = geom(60); // l = 30
        let fluct = longevity_lower_bound(g, 0.0);
        assert_eq!(fluct.regime, LongevityRegime::FluctuationDominated);
        assert!((fluct.steps - 900.0).abs() < 1e-12);

        let drift = longevity_lower_bound(g, 0.25);
        assert_eq!(drift.regime, LongevityRegime::DriftDominated);
        assert!((drift.steps - 60.0).abs() < 1e-12);

        // Continuity within a factor of two at the regime boundary, where
        // the drift bound is l/(2 * 1/l) = l^2 / 2.
        let eps = 1e-9;
        let below = longevity_lower_bound(g, 1.0 / 30.0 - eps).steps;
        let above = longevity_lower_bound(g, 1.0 / 30.0 + eps).steps;
        let ratio = below / above;
        assert!((0.5..=2.0 + 1e-6).contains(&ratio), "boundary ratio {ratio}");
    }
}
