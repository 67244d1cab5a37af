//! OTFS frame geometry, the delay-Doppler channel model and the
//! modulate / propagate / demodulate chain.
//!
//! Vectors of length `MN` are the column-major vectorization of an `M x N`
//! grid (delay index fastest). With a rectangular pulse the whole chain is
//! linear: the transmitter emits `s = (F_N^H ⊗ I_M) x_dd`, the time-domain
//! channel is `H_T = Σ_p h_p' Δ^{k_p} Π^{l_p}` and the receiver returns
//! `y_dd = (F_N ⊗ I_M) r`, so the equivalent delay-Doppler channel is
//! `H_DD = (F_N ⊗ I_M) H_T (F_N^H ⊗ I_M)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cis, unitary_dft, CMatrix, CVector, ONE, ZERO};

/// Geometry of one OTFS frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtfsGrid {
    m: usize,
    n: usize,
    delta_f: f64,
    symbol_duration: f64,
}

impl OtfsGrid {
    /// Critically sampled grid, `T = 1 / delta_f`.
    pub fn new(m: usize, n: usize, delta_f: f64) -> Result<Self> {
        Self::with_symbol_duration(m, n, delta_f, 1.0 / delta_f)
    }

    pub fn with_symbol_duration(
        m: usize,
        n: usize,
        delta_f: f64,
        symbol_duration: f64,
    ) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidDimension(format!(
                "grid must be at least 1x1, got M={m}, N={n}"
            )));
        }
        if !(delta_f.is_finite() && delta_f > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "subcarrier spacing must be positive, got {delta_f}"
            )));
        }
        if !(symbol_duration.is_finite() && symbol_duration > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "symbol duration must be positive, got {symbol_duration}"
            )));
        }
        Ok(Self {
            m,
            n,
            delta_f,
            symbol_duration,
        })
    }

    /// Delay bins (subcarriers).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Doppler bins (time slots).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta_f(&self) -> f64 {
        self.delta_f
    }

    pub fn symbol_duration(&self) -> f64 {
        self.symbol_duration
    }

    /// Frame size `MN`.
    pub fn size(&self) -> usize {
        self.m * self.n
    }

    pub fn delay_resolution(&self) -> f64 {
        1.0 / (self.m as f64 * self.delta_f)
    }

    pub fn doppler_resolution(&self) -> f64 {
        1.0 / (self.n as f64 * self.symbol_duration)
    }

    /// Doppler tap `k = N T nu` for a Doppler shift in Hz.
    pub fn doppler_tap(&self, doppler_hz: f64) -> f64 {
        doppler_hz / self.doppler_resolution()
    }
}

/// One propagation path on the delay-Doppler grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub gain: Complex64,
    pub delay_tap: usize,
    pub doppler_tap: f64,
}

impl PathParams {
    pub fn new(gain: Complex64, delay_tap: usize, doppler_tap: f64) -> Self {
        Self {
            gain,
            delay_tap,
            doppler_tap,
        }
    }

    /// Builds a path from physical delay (s) and Doppler (Hz). The delay must
    /// fall on the delay grid.
    pub fn from_physical(
        gain: Complex64,
        delay_s: f64,
        doppler_hz: f64,
        grid: &OtfsGrid,
    ) -> Result<Self> {
        let tap = delay_s / grid.delay_resolution();
        let rounded = tap.round();
        if !tap.is_finite() || rounded < 0.0 || (tap - rounded).abs() > 1e-9 * rounded.max(1.0) {
            return Err(Error::InvalidPath(format!(
                "delay {delay_s} s is not an integer multiple of the delay resolution"
            )));
        }
        Ok(Self::new(
            gain,
            rounded as usize,
            grid.doppler_tap(doppler_hz),
        ))
    }

    /// Gain with the delay/Doppler coupling phase, `h' = h exp(-j 2 pi k l / MN)`.
    pub fn effective_gain(&self, frame_size: usize) -> Complex64 {
        self.gain * cis(-2.0 * PI * self.doppler_tap * self.delay_tap as f64 / frame_size as f64)
    }

    fn validate(&self, grid: &OtfsGrid) -> Result<()> {
        if self.delay_tap >= grid.size() {
            return Err(Error::InvalidPath(format!(
                "delay tap {} must be below the frame size {}",
                self.delay_tap,
                grid.size()
            )));
        }
        if !self.doppler_tap.is_finite() || !self.gain.re.is_finite() || !self.gain.im.is_finite() {
            return Err(Error::InvalidPath("non-finite path parameter".into()));
        }
        Ok(())
    }
}

/// Ordered list of propagation paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    paths: Vec<PathParams>,
}

impl PathSet {
    pub fn new(paths: Vec<PathParams>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidPath(
                "a path set needs at least one path".into(),
            ));
        }
        Ok(Self { paths })
    }

    pub fn single(path: PathParams) -> Self {
        Self { paths: vec![path] }
    }

    pub fn paths(&self) -> &[PathParams] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// The single line-of-sight path used for sensing.
    pub fn los(&self) -> Result<&PathParams> {
        match self.paths.as_slice() {
            [p] => Ok(p),
            _ => Err(Error::InvalidPath(format!(
                "sensing needs exactly one path, got {}",
                self.paths.len()
            ))),
        }
    }
}

/// An `MN x MN` delay-Doppler domain matrix together with its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DdChannel {
    matrix: CMatrix,
    grid: OtfsGrid,
}

impl DdChannel {
    pub fn new(matrix: CMatrix, grid: OtfsGrid) -> Result<Self> {
        let size = grid.size();
        crate::linalg::ensure_square(&matrix, size, "DD channel")?;
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidParameter(
                "DD channel has non-finite entries".into(),
            ));
        }
        Ok(Self { matrix, grid })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn grid(&self) -> &OtfsGrid {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.grid.size()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `H^H H`.
    pub fn gram(&self) -> CMatrix {
        self.matrix.adjoint() * &self.matrix
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * Complex64::new(factor, 0.0),
            grid: self.grid,
        }
    }
}

/// Forward cyclic shift `Π`: ones on the first subdiagonal and in the
/// top-right corner, so `(Π x)[i] = x[i - 1 mod size]`.
pub fn forward_cyclic_shift(size: usize) -> Result<CMatrix> {
    if size == 0 {
        return Err(Error::InvalidDimension("cyclic shift of size 0".into()));
    }
    let mut pi = CMatrix::zeros(size, size);
    for j in 0..size {
        pi[((j + 1) % size, j)] = ONE;
    }
    Ok(pi)
}

/// `Δ^k = diag(exp(j 2 pi k i / size))`, `i = 0..size`.
pub fn doppler_phase_matrix(k: f64, size: usize) -> Result<CMatrix> {
    if size == 0 {
        return Err(Error::InvalidDimension("Doppler matrix of size 0".into()));
    }
    Ok(CMatrix::from_diagonal(&doppler_phases(k, size)))
}

fn doppler_phases(k: f64, size: usize) -> CVector {
    CVector::from_fn(size, |i, _| cis(2.0 * PI * k * i as f64 / size as f64))
}

/// Accumulates `coeff * diag(row_scale) Δ^k Π^l` into `target`.
fn add_shifted_path(
    target: &mut CMatrix,
    coeff: Complex64,
    k: f64,
    l: usize,
    row_scale: impl Fn(usize) -> Complex64,
) {
    let size = target.nrows();
    let phases = doppler_phases(k, size);
    for j in 0..size {
        let i = (j + l) % size;
        target[(i, j)] += coeff * phases[i] * row_scale(i);
    }
}

/// Time-domain channel `H_T = Σ_p h_p' Δ^{k_p} Π^{l_p}`.
pub fn time_domain_channel(paths: &PathSet, grid: &OtfsGrid) -> Result<CMatrix> {
    let size = grid.size();
    let mut h = CMatrix::zeros(size, size);
    for path in paths.paths() {
        path.validate(grid)?;
        add_shifted_path(
            &mut h,
            path.effective_gain(size),
            path.doppler_tap,
            path.delay_tap,
            |_| ONE,
        );
    }
    Ok(h)
}

/// Applies `(F_N ⊗ I_M)` to every column of `m`.
fn dd_transform_columns(m: &CMatrix, grid: &OtfsGrid, inverse: bool) -> CMatrix {
    let (mm, nn) = (grid.m(), grid.n());
    let f = unitary_dft(nn);
    let f = if inverse { f.adjoint() } else { f };
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for c in 0..m.ncols() {
        for q in 0..nn {
            for p in 0..nn {
                let coeff = f[(q, p)];
                if coeff == ZERO {
                    continue;
                }
                for d in 0..mm {
                    out[(q * mm + d, c)] += coeff * m[(p * mm + d, c)];
                }
            }
        }
    }
    out
}

/// `(F_N ⊗ I_M) H (F_N^H ⊗ I_M)`.
pub fn to_delay_doppler(h_time: &CMatrix, grid: &OtfsGrid) -> CMatrix {
    let left = dd_transform_columns(h_time, grid, false);
    // (A L^H)^H = L A^H with A = F_N ⊗ I_M
    dd_transform_columns(&left.adjoint(), grid, false).adjoint()
}

/// Equivalent delay-Doppler channel `H_DD`.
pub fn dd_channel(paths: &PathSet, grid: &OtfsGrid) -> Result<DdChannel> {
    let h_time = time_domain_channel(paths, grid)?;
    DdChannel::new(to_delay_doppler(&h_time, grid), *grid)
}

/// Derivative of the sensing channel with respect to the Doppler shift in Hz,
/// `h_s' (F_N ⊗ I_M) D_ν Δ^{k_s} Π^{l_s} (F_N^H ⊗ I_M)` with
/// `D_ν = diag(j 2 pi T / M (i - l_s))`.
///
/// The coupling phase of `h_s'` is kept so the result is the exact
/// derivative of [`dd_channel`]; it has no effect on Fisher information.
pub fn doppler_derivative_channel(sensing_path: &PathParams, grid: &OtfsGrid) -> Result<DdChannel> {
    sensing_path.validate(grid)?;
    let size = grid.size();
    let step = 2.0 * PI * grid.symbol_duration() / grid.m() as f64;
    let l = sensing_path.delay_tap as f64;
    let mut h = CMatrix::zeros(size, size);
    add_shifted_path(
        &mut h,
        sensing_path.effective_gain(size),
        sensing_path.doppler_tap,
        sensing_path.delay_tap,
        |i| Complex64::new(0.0, step * (i as f64 - l)),
    );
    DdChannel::new(to_delay_doppler(&h, grid), *grid)
}

/// Derivative of the sensing channel with respect to the normalized Doppler
/// tap `k = N T ν`. Equals [`doppler_derivative_channel`] divided by `N T`.
pub fn doppler_tap_derivative_channel(
    sensing_path: &PathParams,
    grid: &OtfsGrid,
) -> Result<DdChannel> {
    let per_hz = doppler_derivative_channel(sensing_path, grid)?;
    Ok(per_hz.scaled(1.0 / (grid.n() as f64 * grid.symbol_duration())))
}

fn check_len(v: &CVector, grid: &OtfsGrid) -> Result<()> {
    if v.len() != grid.size() {
        return Err(Error::LengthMismatch {
            expected: grid.size(),
            got: v.len(),
        });
    }
    Ok(())
}

fn as_grid(v: &CVector, grid: &OtfsGrid) -> CMatrix {
    CMatrix::from_column_slice(grid.m(), grid.n(), v.as_slice())
}

fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// ISFFT followed by the rectangular-pulse Heisenberg transform.
pub fn otfs_modulate(x_dd: &CVector, grid: &OtfsGrid) -> Result<CVector> {
    check_len(x_dd, grid)?;
    let fm = unitary_dft(grid.m());
    let fn_ = unitary_dft(grid.n());
    let x = as_grid(x_dd, grid);
    let x_tf = &fm * x * fn_.adjoint();
    Ok(vectorize(&(fm.adjoint() * x_tf)))
}

/// Wigner transform followed by the SFFT; inverse of [`otfs_modulate`].
pub fn otfs_demodulate(r: &CVector, grid: &OtfsGrid) -> Result<CVector> {
    check_len(r, grid)?;
    let fm = unitary_dft(grid.m());
    let fn_ = unitary_dft(grid.n());
    let r_t = as_grid(r, grid);
    let y_tf = &fm * r_t;
    Ok(vectorize(&(fm.adjoint() * y_tf * fn_)))
}
