use nalgebra::DVector;
use num_complex::Complex64;

use super::{phase_of, DualPair, EigenBasis, PrecoderSolution};
use crate::error::{Error, Result};
use crate::linalg::{unitary_dft, CMatrix, CVector};
use crate::metrics::sensing_trace_of;
use crate::otfs::DdChannel;

/// Sensing-only optimum: all power on the strongest sensing eigenvector.
///
/// `U` is the full sensing basis, so only its first column carries power;
/// `V = I`. The covariance has rank one and the communication objective is
/// infinite.
pub fn crb_only_precoder(sensing: &EigenBasis, p_t: f64) -> Result<PrecoderSolution> {
    check_power(p_t)?;
    if !(sensing.leading_value() > 0.0) {
        return Err(Error::UnboundedCrb);
    }
    let n = sensing.size();
    let mut sigma = DVector::zeros(n);
    sigma[0] = p_t.sqrt();
    Ok(PrecoderSolution::from_factors(
        sensing.vectors().clone(),
        sigma,
        Some(CMatrix::identity(n, n)),
    ))
}

/// Communication-only optimum `W = W_c √(P_T / tr Λ^{-1/2}) Λ^{-1/4} F`.
pub fn ber_only_precoder(comm: &EigenBasis, p_t: f64) -> Result<PrecoderSolution> {
    check_power(p_t)?;
    let values = comm.values();
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::SingularMatrix("communication channel Gram"));
    }
    let inv_sqrt_sum: f64 = values.iter().map(|v| v.powf(-0.5)).sum();
    let c = (p_t / inv_sqrt_sum).sqrt();
    let sigma = values.map(|v| c * v.powf(-0.25));
    let n = comm.size();
    let mut solution =
        PrecoderSolution::from_factors(comm.vectors().clone(), sigma, Some(unitary_dft(n)));
    solution.objective = inv_sqrt_sum * inv_sqrt_sum / p_t;
    solution.duals = Some(DualPair {
        lambda: 0.0,
        mu: (inv_sqrt_sum / p_t).powi(2),
    });
    Ok(solution)
}

/// Range of sensing thresholds `γ₁` reachable at full power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaRange {
    /// Achieved by the BER-only precoder.
    pub min: f64,
    /// `P_T Ξ₁`, achieved by the CRB-only precoder.
    pub max: f64,
}

impl GammaRange {
    pub fn contains(&self, gamma: f64) -> bool {
        gamma >= self.min && gamma <= self.max
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }
}

pub fn gamma_range(
    comm: &EigenBasis,
    sensing: &EigenBasis,
    h_dot: &DdChannel,
    p_t: f64,
) -> Result<GammaRange> {
    let ber_only = ber_only_precoder(comm, p_t)?;
    let w = ber_only.precoder().expect("closed form always carries V");
    let min = sensing_trace_of(&w, h_dot)?;
    let max = p_t * sensing.leading_value();
    Ok(GammaRange {
        min: min.min(max),
        max,
    })
}

/// Diagonal power loading `Γ* = (μI − λΛ_s)^{-1/2} / |h_c|` for a
/// line-of-sight communication channel aligned with the sensing basis.
pub fn los_gamma_star(
    lambda: f64,
    mu: f64,
    sensing: &EigenBasis,
    h_c_gain: f64,
) -> Result<DVector<f64>> {
    if !(h_c_gain > 0.0) || !h_c_gain.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "communication gain magnitude must be positive, got {h_c_gain}"
        )));
    }
    check_dual_domain(lambda, mu, sensing.leading_value())?;
    Ok(sensing
        .values()
        .map(|xi| (mu - lambda * xi).powf(-0.5) / h_c_gain))
}

/// Beamformer for a frame carrying a single data symbol.
///
/// Returns `√P_T w_c,1` when that already meets the sensing threshold,
/// otherwise the split between `w_s,1` and the part of `w_c,1` orthogonal
/// to it that meets the threshold with equality. If `w_c,1` is parallel to
/// `w_s,1` the orthogonal direction is undefined and the result is
/// `√P_T w_s,1` rotated onto the phase of `w_c,1`.
pub fn single_symbol_precoder(
    comm: &EigenBasis,
    sensing: &EigenBasis,
    gamma_1: f64,
    p_t: f64,
) -> Result<CVector> {
    check_power(p_t)?;
    let xi1 = sensing.leading_value();
    if !(xi1 > 0.0) {
        return Err(Error::UnboundedCrb);
    }
    if gamma_1 > p_t * xi1 {
        return Err(Error::Infeasible(format!(
            "sensing threshold {gamma_1:e} exceeds P_T * xi_1 = {:e}",
            p_t * xi1
        )));
    }
    let wc = comm.leading_vector();
    let ws = sensing.leading_vector();
    let inner = ws.dotc(&wc); // w_s^H w_c
    let scale = |v: &CVector, s: Complex64| v.map(|z| z * s);

    if p_t * inner.norm_sqr() * xi1 > gamma_1 {
        return Ok(scale(&wc, Complex64::new(p_t.sqrt(), 0.0)));
    }

    let orth = &wc - scale(&ws, inner);
    let orth_norm = orth.norm();
    if orth_norm < 1e-12 {
        return Ok(scale(&ws, phase_of(inner) * p_t.sqrt()));
    }
    let wu = orth.unscale(orth_norm);
    let sensing_power = (gamma_1 / xi1).max(0.0);
    let x = phase_of(inner) * sensing_power.sqrt();
    let y = phase_of(wu.dotc(&wc)) * (p_t - sensing_power).max(0.0).sqrt();
    Ok(scale(&ws, x) + scale(&wu, y))
}

pub(crate) fn check_power(p_t: f64) -> Result<()> {
    if p_t > 0.0 && p_t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "power budget must be positive and finite, got {p_t}"
        )))
    }
}

pub(crate) fn check_dual_domain(lambda: f64, mu: f64, xi1: f64) -> Result<()> {
    if lambda >= 0.0 && mu > lambda * xi1 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::IndefiniteDual { lambda, mu, xi1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_diag;
    use crate::solver::eigen_basis;

    fn basis(values: &[f64]) -> EigenBasis {
        eigen_basis(&real_diag(values.iter().copied())).unwrap()
    }

    #[test]
    fn crb_only_is_rank_one_on_leading_direction() {
        let s = basis(&[1.0, 5.0, 2.0]);
        let sol = crb_only_precoder(&s, 3.0).unwrap();
        assert_eq!(sol.rank(1e-12), 1);
        let w = sol.precoder().unwrap();
        let sensing = (w.adjoint() * s.gram() * &w).trace().re;
        assert!((sensing - 3.0 * 5.0).abs() < 1e-12);
        assert!(crb_only_precoder(&basis(&[0.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn ber_only_flat_spectrum_is_uniform() {
        let c = basis(&[1.0; 4]);
        let sol = ber_only_precoder(&c, 2.0).unwrap();
        assert!(sol.sigma.iter().all(|&s| (s - 0.5f64.sqrt()).abs() < 1e-14));
        assert!((sol.power() - 2.0).abs() < 1e-12);
        assert!((sol.objective - 8.0).abs() < 1e-12);
        assert!(matches!(
            ber_only_precoder(&basis(&[1.0, 0.0]), 1.0),
            Err(Error::SingularMatrix(_))
        ));
    }

    #[test]
    fn los_inactive_constraint_is_uniform() {
        let s = basis(&[3.0, 1.0]);
        let g = los_gamma_star(0.0, 4.0, &s, 2.0).unwrap();
        assert!(g.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!(matches!(
            los_gamma_star(1.0, 3.0, &s, 1.0),
            Err(Error::IndefiniteDual { .. })
        ));
        let near = los_gamma_star(1.0, 3.0 + 1e-10, &s, 1.0).unwrap();
        assert!(near[0] > 1e4);
    }

    #[test]
    fn single_symbol_orthogonal_split() {
        // w_c,1 = e_0, w_s,1 = e_1
        let c = basis(&[2.0, 1.0]);
        let s = basis(&[1.0, 4.0]);
        let w = single_symbol_precoder(&c, &s, 2.0, 1.0).unwrap();
        assert!((w[1].norm_sqr() - 0.5).abs() < 1e-14);
        assert!((w[0].norm_sqr() - 0.5).abs() < 1e-14);
        let w0 = single_symbol_precoder(&c, &s, 0.0, 1.0).unwrap();
        assert!((w0[0] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(single_symbol_precoder(&c, &s, 4.1, 1.0).is_err());
    }

    #[test]
    fn single_symbol_parallel_fallback() {
        let c = basis(&[2.0, 1.0]);
        let s = basis(&[3.0, 1.0]);
        // leading vectors coincide, so the first branch applies for any feasible gamma
        let w = single_symbol_precoder(&c, &s, 3.0, 1.0).unwrap();
        assert!((w.norm_squared() - 1.0).abs() < 1e-14);
        assert!((w[0].norm_sqr() - 1.0).abs() < 1e-14);
    }
}
