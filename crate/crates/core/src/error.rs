use thiserror::Error;

use crate::solver::EllipsoidState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("singular matrix in {0}")]
    SingularMatrix(&'static str),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),

    #[error("Fisher information is zero, CRB is unbounded")]
    UnboundedCrb,

    #[error("dual point outside domain: need lambda >= 0 and mu > lambda * xi_1 (lambda={lambda}, mu={mu}, xi_1={xi1})")]
    IndefiniteDual { lambda: f64, mu: f64, xi1: f64 },

    #[error("symbol count K={k} outside 1..={max}")]
    SymbolCountOutOfRange { k: usize, max: usize },

    #[error("sensing threshold {gamma:.6e} outside feasible range [{min:.6e}, {max:.6e}]")]
    GammaOutOfRange { gamma: f64, min: f64, max: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero subgradient, ellipsoid center is optimal")]
    ZeroSubgradient,

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("ellipsoid iteration did not converge after {iterations} iterations (last measure {measure:.3e})")]
    NoConvergence {
        iterations: usize,
        measure: f64,
        state: EllipsoidState,
    },
}
