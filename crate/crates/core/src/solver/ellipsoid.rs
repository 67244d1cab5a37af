use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

/// Two-dimensional ellipsoid `{θ : (θ − κ)ᵀ B (θ − κ) ≤ 1}`, stored through
/// its inverse shape matrix `B⁻¹ = F Fᵀ`. The dual search runs it over
/// `θ = [λ, ν]` with `ν = μ − λΞ₁`.
///
/// Updates act on the factor `F`, so the shape stays positive definite when
/// the ellipsoid becomes a thin needle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidState {
    pub center: Vector2<f64>,
    pub shape_inverse: Matrix2<f64>,
    pub iteration: usize,
    factor: Matrix2<f64>,
}

impl EllipsoidState {
    pub fn new(center: Vector2<f64>, shape_inverse: Matrix2<f64>) -> Result<Self> {
        let symmetric = (shape_inverse[(0, 1)] - shape_inverse[(1, 0)]).abs()
            <= 1e-12 * shape_inverse.abs().max();
        let factor = symmetric
            .then(|| shape_inverse.cholesky())
            .flatten()
            .map(|c| c.l())
            .filter(|l| l.iter().all(|v| v.is_finite()))
            .ok_or_else(|| not_definite(&shape_inverse))?;
        Ok(Self {
            center,
            shape_inverse,
            iteration: 0,
            factor,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.center[0]
    }

    pub fn nu(&self) -> f64 {
        self.center[1]
    }

    /// `√(dᵀ B⁻¹ d)`, the half-width of the ellipsoid along `d`.
    pub fn width_along(&self, d: &Vector2<f64>) -> f64 {
        (self.factor.transpose() * d).norm()
    }
}

fn not_definite(b: &Matrix2<f64>) -> Error {
    Error::NumericalBreakdown(format!(
        "ellipsoid shape is not symmetric positive definite: {:?}",
        b.as_slice()
    ))
}

/// Central-cut update that keeps the half `{θ : dᵀ(θ − κ) ≤ 0}`.
pub fn ellipsoid_step(state: &EllipsoidState, d: Vector2<f64>) -> Result<EllipsoidState> {
    if d.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroSubgradient);
    }
    let a = state.factor.transpose() * d;
    let width = a.norm();
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::NumericalBreakdown(format!(
            "d^T B^-1 d = {:e}",
            width * width
        )));
    }
    let a_unit = a / width;
    let center = state.center - state.factor * a_unit / 3.0;
    // F⁺ = (2/√3) F (I − (1 − 1/√3) â âᵀ), so that F⁺F⁺ᵀ = (4/3)(B⁻¹ − (2/3) g gᵀ)
    let shrink = Matrix2::identity() - a_unit * a_unit.transpose() * (1.0 - 3f64.sqrt().recip());
    let factor = state.factor * shrink * (2.0 / 3f64.sqrt());
    let shape_inverse = factor * factor.transpose();
    if !factor.iter().all(|v| v.is_finite()) || factor.determinant() == 0.0 {
        return Err(not_definite(&shape_inverse));
    }
    Ok(EllipsoidState {
        center,
        shape_inverse,
        iteration: state.iteration + 1,
        factor,
    })
}
