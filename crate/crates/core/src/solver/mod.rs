//! Precoder optimization.
//!
//! The minimum-BER design works on the covariance `P = W W^H = U Σ² U^H`:
//! [`DualSolver`] finds `(U, Σ)` from the closed-form optimal covariance and an
//! ellipsoid search over the two dual variables, and [`construct_v`] supplies
//! the unitary factor that equalizes all per-symbol MSEs. The CRB-only and
//! BER-only closed forms bound the feasible sensing thresholds.

mod algorithm;
mod closed_form;
mod covariance;
mod ellipsoid;
mod equalize;

pub use algorithm::{
    default_max_iters, solve_algorithm1, DualSolver, EllipsoidInit, IterationRecord,
    SolveDiagnostics, SolverConfig,
};
pub use closed_form::{
    ber_only_precoder, crb_only_precoder, gamma_range, los_gamma_star, single_symbol_precoder,
    GammaRange,
};
pub use covariance::{dual_subgradient, optimal_covariance, DualPoint, DualProblem};
pub use ellipsoid::{ellipsoid_step, EllipsoidState};
pub use equalize::{construct_v, construct_v_with, feasibility_check, DftOrientation};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_defect, hermitian_eigen, reconstruct, scale_columns, CMatrix, CVector,
};

/// Eigen-decomposition of a channel Gram (`H^H H` or `Ḣ^H Ḣ`), values in
/// descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    vectors: CMatrix,
    values: DVector<f64>,
}

/// Tolerance on Hermitian asymmetry and negative eigenvalues, relative to
/// the matrix scale.
const SPECTRAL_TOL: f64 = 1e-10;

/// Descending spectral decomposition of a Hermitian PSD matrix.
///
/// Eigenvalues below `-1e-10` (relative) are rejected, smaller negatives are
/// clipped to zero.
pub fn eigen_basis(gram: &CMatrix) -> Result<EigenBasis> {
    if gram.nrows() != gram.ncols() || gram.nrows() == 0 {
        return Err(Error::InvalidDimension(format!(
            "Gram matrix must be square and non-empty, got {}x{}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    let defect = hermitian_defect(gram);
    if defect > SPECTRAL_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let (values, vectors) = hermitian_eigen(gram);
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if let Some(&neg) = values.iter().find(|&&v| v < -SPECTRAL_TOL * scale) {
        return Err(Error::NotPositiveSemidefinite(neg));
    }
    Ok(EigenBasis {
        vectors,
        values: values.map(|v| v.max(0.0)),
    })
}

impl EigenBasis {
    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn size(&self) -> usize {
        self.values.len()
    }

    /// Largest eigenvalue (`Λ_1` or `Ξ_1`).
    pub fn leading_value(&self) -> f64 {
        self.values[0]
    }

    pub fn leading_vector(&self) -> CVector {
        self.vectors.column(0).into_owned()
    }

    /// `V diag(values) V^H`.
    pub fn gram(&self) -> CMatrix {
        reconstruct(&self.vectors, &self.values)
    }

    /// `V diag(f(values)) V^H`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        reconstruct(&self.vectors, &self.values.map(f))
    }
}

/// Dual variables of the power (`mu`) and sensing (`lambda`) constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPair {
    pub lambda: f64,
    pub mu: f64,
}

/// `W = U Σ V` with its covariance and solver bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSolution {
    pub u: CMatrix,
    /// Diagonal of `Σ`.
    pub sigma: DVector<f64>,
    /// Missing when the MSE-balancing factor could not be built.
    pub v: Option<CMatrix>,
    /// `P = U Σ² U^H`.
    pub covariance: CMatrix,
    pub duals: Option<DualPair>,
    /// Outcome of the MSE-balancing feasibility test, when evaluated.
    pub feasible: Option<bool>,
    /// `tr[(W^H H^H H W)^{-1}]`; infinite for rank-deficient designs.
    pub objective: f64,
    pub diagnostics: Option<SolveDiagnostics>,
}

impl PrecoderSolution {
    pub(crate) fn from_factors(u: CMatrix, sigma: DVector<f64>, v: Option<CMatrix>) -> Self {
        let covariance = reconstruct(&u, &sigma.map(|s| s * s));
        Self {
            u,
            sigma,
            v,
            covariance,
            duals: None,
            feasible: None,
            objective: f64::INFINITY,
            diagnostics: None,
        }
    }

    /// The precoder `U Σ V`, if `V` is available.
    pub fn precoder(&self) -> Option<CMatrix> {
        self.v
            .as_ref()
            .map(|v| scale_columns(&self.u, &self.sigma) * v)
    }

    /// `tr(Σ²)`.
    pub fn power(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum()
    }

    pub fn rank(&self, tol: f64) -> usize {
        let max = self.sigma.iter().fold(0.0f64, |a, &b| a.max(b));
        self.sigma.iter().filter(|&&s| s > tol * max).count()
    }
}

/// `e^{j arg(z)}`, or 1 when `z` is zero.
pub(crate) fn phase_of(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_diag;

    #[test]
    fn identity_basis() {
        let b = eigen_basis(&CMatrix::identity(3, 3)).unwrap();
        assert!(b.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let v = b.vectors();
        assert!((v.adjoint() * v - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_is_sorted_with_matching_vectors() {
        let g = real_diag([1.0, 3.0, 2.0]);
        let b = eigen_basis(&g).unwrap();
        assert_eq!(b.values().as_slice(), &[3.0, 2.0, 1.0]);
        // leading vector is e_2 up to phase
        assert!((b.vectors()[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((b.vectors()[(2, 1)].norm() - 1.0).abs() < 1e-12);
        assert!((b.gram() - g).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_and_indefinite() {
        let mut g = CMatrix::identity(2, 2);
        g[(0, 1)] = Complex64::new(0.5, 0.0);
        assert!(matches!(eigen_basis(&g), Err(Error::NotHermitian(_))));
        let g = real_diag([1.0, -0.5]);
        assert!(matches!(
            eigen_basis(&g),
            Err(Error::NotPositiveSemidefinite(_))
        ));
        // tiny negatives are clipped
        let g = real_diag([1.0, -1e-13]);
        assert_eq!(eigen_basis(&g).unwrap().values()[1], 0.0);
    }

    #[test]
    fn phase_of_zero_is_one() {
        assert_eq!(phase_of(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        assert!((phase_of(Complex64::new(0.0, -3.0)) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }
}
