use nalgebra::DVector;
use num_complex::Complex64;

use super::closed_form::check_dual_domain;
use super::EigenBasis;
use crate::error::{Error, Result};
use crate::linalg::{left_singular, psd_sqrt, reconstruct, scale_columns, CMatrix};

/// Minimizer of the Lagrangian over the covariance for fixed duals,
/// `P* = S₀⁻¹ (S₀ S₁ S₀)^{1/2} S₀⁻¹` with `S₀ = W_c Λ_c^{1/2} W_c^H` and
/// `S₁ = W_s (μI − λΛ_s)⁻¹ W_s^H`.
pub fn optimal_covariance(
    lambda: f64,
    mu: f64,
    comm: &EigenBasis,
    sensing: &EigenBasis,
) -> Result<CMatrix> {
    check_dual_domain(lambda, mu, sensing.leading_value())?;
    check_comm(comm)?;
    let s0 = comm.apply(f64::sqrt);
    let s0_inv = comm.apply(|v| v.powf(-0.5));
    let s1 = sensing.apply(|xi| 1.0 / (mu - lambda * xi));
    let root = psd_sqrt(&(&s0 * s1 * &s0));
    Ok(&s0_inv * root * &s0_inv)
}

/// Gradient of the dual function, `[γ₁ − tr(P S_s), tr(P) − P_T]`.
pub fn dual_subgradient(
    p_star: &CMatrix,
    sensing: &EigenBasis,
    gamma_1: f64,
    p_t: f64,
) -> [f64; 2] {
    let s_s = sensing.gram();
    // tr(P S) = sum_ij P_ij S_ji = sum_ij conj(S_ij) P_ij for Hermitian S
    let sensing_trace = s_s.dotc(p_star).re;
    let power = p_star.trace().re;
    [gamma_1 - sensing_trace, power - p_t]
}

fn check_comm(comm: &EigenBasis) -> Result<()> {
    if comm.values().iter().all(|&v| v > 0.0) {
        Ok(())
    } else {
        Err(Error::SingularMatrix("communication channel Gram"))
    }
}

/// Precomputed data for repeated evaluations of the dual function.
///
/// With `A = S₀ W_s` and `D = (μI − λΛ_s)⁻¹`, the covariance is
/// `P = S₀⁻¹ X S₀⁻¹` where `X = (A D A^H)^{1/2}`. One SVD of
/// `A D^{1/2}` gives `tr P`, `tr(P S_s)` and the objective `tr X⁻¹` without
/// forming `P`.
#[derive(Debug, Clone)]
pub struct DualProblem {
    comm: EigenBasis,
    sensing: EigenBasis,
    s0_inv: CMatrix,
    a: CMatrix,
    /// `S₀⁻²`, the inverse communication Gram.
    gram_c_inv: CMatrix,
    /// `S₀⁻¹ S_s S₀⁻¹`.
    sensing_weight: CMatrix,
}

/// Dual function data at one `(λ, μ)`.
#[derive(Debug, Clone)]
pub struct DualPoint {
    pub lambda: f64,
    pub mu: f64,
    /// `μ − λΞ₁`, the distance to the edge of the dual domain.
    pub nu: f64,
    /// Eigenvalues of `X`, descending.
    pub x_eigenvalues: DVector<f64>,
    /// Eigenvectors of `X`.
    pub x_eigenvectors: CMatrix,
    /// `tr P*`.
    pub power: f64,
    /// `tr(P* S_s)`.
    pub sensing_trace: f64,
    /// `tr[(P* S_c)⁻¹]`.
    pub objective: f64,
}

impl DualPoint {
    /// Lagrangian at `P*`, which is the dual function value.
    pub fn dual_value(&self, gamma_1: f64, p_t: f64) -> f64 {
        self.objective + self.mu * (self.power - p_t) - self.lambda * (self.sensing_trace - gamma_1)
    }

    pub fn subgradient(&self, gamma_1: f64, p_t: f64) -> [f64; 2] {
        [gamma_1 - self.sensing_trace, self.power - p_t]
    }
}

impl DualProblem {
    pub fn new(comm: EigenBasis, sensing: EigenBasis) -> Result<Self> {
        check_comm(&comm)?;
        if comm.size() != sensing.size() {
            return Err(Error::InvalidDimension(format!(
                "communication basis has size {}, sensing basis {}",
                comm.size(),
                sensing.size()
            )));
        }
        let s0 = comm.apply(f64::sqrt);
        let s0_inv = comm.apply(|v| v.powf(-0.5));
        let gram_c_inv = comm.apply(|v| 1.0 / v);
        let a = &s0 * sensing.vectors();
        let sensing_weight = &s0_inv * sensing.gram() * &s0_inv;
        Ok(Self {
            comm,
            sensing,
            s0_inv,
            a,
            gram_c_inv,
            sensing_weight,
        })
    }

    pub fn comm(&self) -> &EigenBasis {
        &self.comm
    }

    pub fn sensing(&self) -> &EigenBasis {
        &self.sensing
    }

    pub fn xi1(&self) -> f64 {
        self.sensing.leading_value()
    }

    pub fn evaluate(&self, lambda: f64, mu: f64) -> Result<DualPoint> {
        check_dual_domain(lambda, mu, self.xi1())?;
        self.evaluate_gap(lambda, mu - lambda * self.xi1())
    }

    /// [`evaluate`](Self::evaluate) at `μ = ν + λΞ₁`. The weights
    /// `ν + λ(Ξ₁ − Ξ_i)` are sums of nonnegative terms, so points close to the
    /// domain edge keep full precision.
    pub fn evaluate_gap(&self, lambda: f64, nu: f64) -> Result<DualPoint> {
        let xi1 = self.xi1();
        let mu = nu + lambda * xi1;
        if !(lambda >= 0.0 && nu > 0.0 && mu.is_finite()) {
            return Err(Error::IndefiniteDual { lambda, mu, xi1 });
        }
        let d = self
            .sensing
            .values()
            .map(|xi| (nu + lambda * (xi1 - xi)).powf(-0.5));
        // X = (A D A^H)^{1/2}: its eigenpairs are the singular pairs of A D^{1/2}
        let (roots, vectors) = left_singular(&scale_columns(&self.a, &d));
        let smallest = roots[roots.len() - 1];
        if !(smallest > 0.0) || !roots[0].is_finite() {
            return Err(Error::NumericalBreakdown(format!(
                "dual covariance lost definiteness at lambda={lambda:e}, mu={mu:e} (singular value {smallest:e})"
            )));
        }
        let power = weighted_diag_sum(&self.gram_c_inv, &vectors, &roots);
        let sensing_trace = weighted_diag_sum(&self.sensing_weight, &vectors, &roots);
        let objective = roots.iter().map(|r| 1.0 / r).sum();
        Ok(DualPoint {
            lambda,
            mu,
            nu,
            x_eigenvalues: roots,
            x_eigenvectors: vectors,
            power,
            sensing_trace,
            objective,
        })
    }

    /// `P*` for an evaluated point.
    pub fn covariance(&self, point: &DualPoint) -> CMatrix {
        let b = &self.s0_inv * &point.x_eigenvectors;
        reconstruct(&b, &point.x_eigenvalues)
    }
}

/// `Σ_k w_k v_k^H G v_k` for Hermitian `G`.
fn weighted_diag_sum(g: &CMatrix, vectors: &CMatrix, weights: &DVector<f64>) -> f64 {
    let gv = g * vectors;
    (0..vectors.ncols())
        .map(|k| {
            let q: Complex64 = vectors.column(k).dotc(&gv.column(k));
            weights[k] * q.re
        })
        .sum()
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
    fn scalar_reduction() {
        let c = basis(&[1.0; 3]);
        let s = basis(&[2.0; 3]);
        let p = optimal_covariance(0.25, 1.0, &c, &s).unwrap();
        let expected = (1.0f64 - 0.5).powf(-0.5);
        assert!((p - CMatrix::identity(3, 3) * Complex64::new(expected, 0.0)).norm() < 1e-12);
        let p0 = optimal_covariance(0.0, 4.0, &c, &s).unwrap();
        assert!((p0 - CMatrix::identity(3, 3) * Complex64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn domain_and_singularity_errors() {
        let c = basis(&[1.0, 1.0]);
        let s = basis(&[2.0, 1.0]);
        assert!(matches!(
            optimal_covariance(-0.1, 1.0, &c, &s),
            Err(Error::IndefiniteDual { .. })
        ));
        assert!(matches!(
            optimal_covariance(0.5, 1.0, &c, &s),
            Err(Error::IndefiniteDual { .. })
        ));
        assert!(optimal_covariance(0.1, 1.0, &basis(&[1.0, 0.0]), &s).is_err());
    }

    #[test]
    fn subgradient_components() {
        let s = basis(&[2.0, 1.0]);
        let p = real_diag([1.5, 0.5]);
        let d = dual_subgradient(&p, &s, 3.5, 2.0);
        assert!(d[0].abs() < 1e-14);
        assert!(d[1].abs() < 1e-14);
        let d = dual_subgradient(&real_diag([2.0, 1.0]), &s, 0.0, 2.0);
        assert!((d[1] - 1.0).abs() < 1e-14);
        assert!((d[0] + 5.0).abs() < 1e-14);
    }

    #[test]
    fn cached_evaluation_matches_direct_formula() {
        let c = basis(&[3.0, 1.0, 0.5]);
        let s = basis(&[0.2, 2.0, 1.0]);
        let problem = DualProblem::new(c.clone(), s.clone()).unwrap();
        let point = problem.evaluate(0.3, 1.1).unwrap();
        let p = optimal_covariance(0.3, 1.1, &c, &s).unwrap();
        assert!((problem.covariance(&point) - &p).norm() < 1e-12);
        let d = dual_subgradient(&p, &s, 0.7, 2.0);
        let cached = point.subgradient(0.7, 2.0);
        assert!((d[0] - cached[0]).abs() < 1e-12 && (d[1] - cached[1]).abs() < 1e-12);
        // tr[(P S_c)^{-1}] = tr(S_c^{-1} P^{-1})
        let direct = (crate::linalg::hpd_inverse(&p, "p").unwrap() * c.apply(|v| 1.0 / v))
            .trace()
            .re;
        assert!((direct - point.objective).abs() < 1e-10 * direct);
    }
}
