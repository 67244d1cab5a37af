use nalgebra::DVector;

use crate::error::Result;
use crate::linalg::{hermitian_eigen, hpd_inverse, scale_columns, unitary_dft, CMatrix};
use crate::metrics::NoiseModel;
use crate::qam::QamConstellation;

/// Which DFT matrix completes the MSE-balancing rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DftOrientation {
    #[default]
    Forward,
    Inverse,
}

/// `G = Σ Z_c Σ` for a real diagonal `Σ`.
fn sandwich(sigma: &DVector<f64>, z_c: &CMatrix) -> CMatrix {
    scale_columns(&scale_columns(z_c, sigma).transpose(), sigma).transpose()
}

/// Unitary `V = Υ F` where `(Σ Z_c Σ)⁻¹ = Υ Ψ Υ^H`, so that
/// `V^H (Σ Z_c Σ)⁻¹ V` has a constant diagonal.
pub fn construct_v(sigma: &DVector<f64>, z_c: &CMatrix) -> Result<CMatrix> {
    construct_v_with(sigma, z_c, DftOrientation::Forward)
}

pub fn construct_v_with(
    sigma: &DVector<f64>,
    z_c: &CMatrix,
    orientation: DftOrientation,
) -> Result<CMatrix> {
    let g_inv = hpd_inverse(&sandwich(sigma, z_c), "Sigma Z_c Sigma")?;
    let (_, upsilon) = hermitian_eigen(&g_inv);
    let f = unitary_dft(sigma.len());
    Ok(match orientation {
        DftOrientation::Forward => upsilon * f,
        DftOrientation::Inverse => upsilon * f.adjoint(),
    })
}

/// Whether balanced MSEs keep every symbol inside the convex BER regime,
/// `tr[(Σ Z_c Σ)⁻¹] ≤ MN β / (3 σ_c²)`. A singular `Σ Z_c Σ` fails.
pub fn feasibility_check(
    sigma: &DVector<f64>,
    z_c: &CMatrix,
    constellation: &QamConstellation,
    noise: &NoiseModel,
) -> bool {
    let Ok(g_inv) = hpd_inverse(&sandwich(sigma, z_c), "Sigma Z_c Sigma") else {
        return false;
    };
    let trace = g_inv.trace().re;
    let n = sigma.len() as f64;
    trace.is_finite() && trace <= n * constellation.beta() / (3.0 * noise.sigma_c_sq())
}
