//! Dense complex linear-algebra helpers shared by the channel, metric and
//! solver code.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub(crate) fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Unitary DFT matrix, `F[n, k] = exp(-j 2 pi n k / size) / sqrt(size)`.
pub fn unitary_dft(size: usize) -> CMatrix {
    let scale = 1.0 / (size as f64).sqrt();
    CMatrix::from_fn(size, size, |n, k| {
        // reduce the exponent first so large sizes keep full phase accuracy
        let idx = (n * k) % size;
        cis(-2.0 * std::f64::consts::PI * idx as f64 / size as f64) * scale
    })
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

/// Relative Frobenius asymmetry `||A - A^H|| / max(1, ||A||)`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let diff = m - m.adjoint();
    diff.norm() / m.norm().max(1.0)
}

pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
///
/// Ties keep the order returned by the underlying solver (stable sort).
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = symmetrize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Singular values (descending) and left singular vectors of `b`. These are
/// the eigenpairs of `b b^H` without forming the product, so the small end of
/// the spectrum keeps its relative accuracy.
pub fn left_singular(b: &CMatrix) -> (DVector<f64>, CMatrix) {
    let svd = b.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors were requested");
    let n = svd.singular_values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| svd.singular_values[i]));
    let mut vectors = CMatrix::zeros(u.nrows(), n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &u.column(src));
    }
    (values, vectors)
}

/// Scales column `j` of `m` by `scale[j]`.
pub fn scale_columns(m: &CMatrix, scale: &DVector<f64>) -> CMatrix {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= Complex64::new(scale[j], 0.0);
    }
    out
}

/// `V diag(values) V^H`.
pub fn reconstruct(vectors: &CMatrix, values: &DVector<f64>) -> CMatrix {
    scale_columns(vectors, values) * vectors.adjoint()
}

/// Principal square root of a Hermitian PSD matrix; eigenvalues are clipped
/// at zero before taking the root.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    reconstruct(&vectors, &values.map(|v| v.max(0.0).sqrt()))
}

/// Inverse of a Hermitian positive definite matrix through Cholesky.
pub fn hpd_inverse(m: &CMatrix, context: &'static str) -> Result<CMatrix> {
    let chol = Cholesky::new(symmetrize(m)).ok_or(Error::SingularMatrix(context))?;
    let inv = chol.inverse();
    if inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(inv)
    } else {
        Err(Error::SingularMatrix(context))
    }
}

/// `log det` of a Hermitian positive definite matrix.
pub fn hpd_log_det(m: &CMatrix, context: &'static str) -> Result<f64> {
    let chol = Cholesky::new(symmetrize(m)).ok_or(Error::SingularMatrix(context))?;
    Ok(2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|z| z.re.ln())
            .sum::<f64>())
}

#[cfg(test)]
pub(crate) fn real_diag(values: impl IntoIterator<Item = f64>) -> CMatrix {
    let v: Vec<Complex64> = values.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    CMatrix::from_diagonal(&CVector::from_vec(v))
}

pub(crate) fn ensure_square(m: &CMatrix, size: usize, what: &str) -> Result<()> {
    if m.nrows() != size || m.ncols() != size {
        return Err(Error::InvalidDimension(format!(
            "{what} is {}x{}, expected {size}x{size}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}
