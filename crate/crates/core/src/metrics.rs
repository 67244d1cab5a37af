//! Analytic link metrics: ZF/MMSE MSE and SINR, average BER and its Jensen
//! lower bound, Doppler Fisher information and CRB, and capacity.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, hpd_inverse, hpd_log_det, CMatrix};
use crate::otfs::DdChannel;
use crate::qam::QamConstellation;

/// Noise powers in linear units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma_c_sq: f64,
    sigma_s_sq: f64,
}

impl NoiseModel {
    pub fn new(sigma_c_sq: f64, sigma_s_sq: f64) -> Result<Self> {
        for (name, v) in [("communication", sigma_c_sq), ("sensing", sigma_s_sq)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} noise power must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            sigma_c_sq,
            sigma_s_sq,
        })
    }

    pub fn from_dbm(sigma_c_dbm: f64, sigma_s_dbm: f64) -> Result<Self> {
        Self::new(dbm_to_linear(sigma_c_dbm), dbm_to_linear(sigma_s_dbm))
    }

    pub fn sigma_c_sq(&self) -> f64 {
        self.sigma_c_sq
    }

    pub fn sigma_s_sq(&self) -> f64 {
        self.sigma_s_sq
    }
}

/// `10^(dBm / 10)`, normalized milliwatts.
pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn linear_to_dbm(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Equalizer {
    ZeroForcing,
    Mmse,
}

impl Equalizer {
    /// Regularization indicator: 0 for ZF, 1 for MMSE.
    fn zeta(self) -> f64 {
        match self {
            Equalizer::ZeroForcing => 0.0,
            Equalizer::Mmse => 1.0,
        }
    }
}

/// Gaussian tail `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Effective Gram `W^H H^H H W`.
pub fn effective_gram(precoder: &CMatrix, h_c: &DdChannel) -> Result<CMatrix> {
    ensure_square(precoder, h_c.size(), "precoder")?;
    let hw = h_c.matrix() * precoder;
    Ok(hw.adjoint() * hw)
}

/// ZF MSE matrix `σ_c² (W^H H^H H W)^{-1}`.
pub fn zf_mse_matrix(precoder: &CMatrix, h_c: &DdChannel, noise: &NoiseModel) -> Result<CMatrix> {
    let gram = effective_gram(precoder, h_c)?;
    let inv = hpd_inverse(&gram, "effective channel H W")?;
    Ok(inv * Complex64::new(noise.sigma_c_sq, 0.0))
}

/// Diagonal of `(ζ σ_c² I + W^H H^H H W)^{-1}`.
pub fn equalizer_diagonal(
    precoder: &CMatrix,
    h_c: &DdChannel,
    noise: &NoiseModel,
    equalizer: Equalizer,
) -> Result<DVector<f64>> {
    let mut gram = effective_gram(precoder, h_c)?;
    let reg = equalizer.zeta() * noise.sigma_c_sq;
    for i in 0..gram.nrows() {
        gram[(i, i)] += reg;
    }
    let inv = hpd_inverse(&gram, "effective channel H W")?;
    Ok(inv.diagonal().map(|z| z.re))
}

/// Per-symbol post-equalization SINR,
/// `1 / [σ_c² (ζ σ_c² I + W^H H^H H W)^{-1}]_ii - ζ`.
pub fn sinr_per_symbol(
    precoder: &CMatrix,
    h_c: &DdChannel,
    noise: &NoiseModel,
    equalizer: Equalizer,
) -> Result<DVector<f64>> {
    let diag = equalizer_diagonal(precoder, h_c, noise, equalizer)?;
    Ok(diag.map(|g| 1.0 / (noise.sigma_c_sq * g) - equalizer.zeta()))
}

/// `(α / MN) Σ_i Q(sqrt(β SINR_i))`.
pub fn average_ber(sinr: &DVector<f64>, constellation: &QamConstellation) -> f64 {
    if sinr.is_empty() {
        return 0.0;
    }
    let sum: f64 = sinr
        .iter()
        .map(|&s| q_function((constellation.beta() * s.max(0.0)).sqrt()))
        .sum();
    constellation.alpha() * sum / sinr.len() as f64
}

/// Jensen lower bound `α Q(sqrt(β MN / (σ_c² tr[(W^H H^H H W)^{-1}])))`.
pub fn ber_lower_bound(
    precoder: &CMatrix,
    h_c: &DdChannel,
    noise: &NoiseModel,
    constellation: &QamConstellation,
) -> Result<f64> {
    let gram = effective_gram(precoder, h_c)?;
    let inv = hpd_inverse(&gram, "effective channel H W")?;
    let tr = inv.diagonal().iter().map(|z| z.re).sum::<f64>();
    Ok(ber_bound_from_trace(tr, h_c.size(), noise, constellation))
}

/// Jensen bound expressed through `tr[(W^H H^H H W)^{-1}]`.
pub fn ber_bound_from_trace(
    trace_inv: f64,
    frame_size: usize,
    noise: &NoiseModel,
    constellation: &QamConstellation,
) -> f64 {
    let arg = constellation.beta() * frame_size as f64 / (noise.sigma_c_sq * trace_inv);
    constellation.alpha() * q_function(arg.sqrt())
}

/// Lower bound of the BER-only design that sends `k` symbols on the `k`
/// strongest eigen sub-channels:
/// `α Q(sqrt(β K P_T / (σ_c² (Σ_{i<=K} Λ_i^{-1/2})²)))`.
pub fn ber_only_lower_bound_k(
    eigs_c: &[f64],
    k: usize,
    p_t: f64,
    noise: &NoiseModel,
    constellation: &QamConstellation,
) -> Result<f64> {
    if k == 0 || k > eigs_c.len() {
        return Err(Error::SymbolCountOutOfRange {
            k,
            max: eigs_c.len(),
        });
    }
    if eigs_c.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter(
            "eigenvalues must be sorted in descending order".into(),
        ));
    }
    if eigs_c[k - 1] <= 0.0 {
        return Err(Error::SingularMatrix("communication Gram"));
    }
    let s: f64 = eigs_c[..k].iter().map(|l| l.powf(-0.5)).sum();
    let arg = constellation.beta() * k as f64 * p_t / (noise.sigma_c_sq * s * s);
    Ok(constellation.alpha() * q_function(arg.sqrt()))
}

/// Doppler Fisher information `tr(Ḣ W W^H Ḣ^H) / σ_s²`.
pub fn fisher_information(
    precoder: &CMatrix,
    h_dot: &DdChannel,
    noise: &NoiseModel,
) -> Result<f64> {
    Ok(sensing_trace_of(precoder, h_dot)? / noise.sigma_s_sq)
}

/// `tr(Ḣ W W^H Ḣ^H) = ||Ḣ W||_F²`.
pub fn sensing_trace_of(precoder: &CMatrix, h_dot: &DdChannel) -> Result<f64> {
    if precoder.nrows() != h_dot.size() {
        return Err(Error::InvalidDimension(format!(
            "precoder has {} rows, channel size is {}",
            precoder.nrows(),
            h_dot.size()
        )));
    }
    Ok((h_dot.matrix() * precoder).norm_squared())
}

/// `1 / I(ν)`.
pub fn compute_crb(precoder: &CMatrix, h_dot: &DdChannel, noise: &NoiseModel) -> Result<f64> {
    let fisher = fisher_information(precoder, h_dot, noise)?;
    if fisher <= 0.0 {
        return Err(Error::UnboundedCrb);
    }
    Ok(1.0 / fisher)
}

/// Per-symbol check of `σ_c² <= β / (3 [(W^H H^H H W)^{-1}]_ii)`.
pub fn convexity_condition_holds(
    precoder: &CMatrix,
    h_c: &DdChannel,
    noise: &NoiseModel,
    constellation: &QamConstellation,
) -> Result<Vec<bool>> {
    let diag = equalizer_diagonal(precoder, h_c, noise, Equalizer::ZeroForcing)?;
    Ok(diag
        .iter()
        .map(|&g| noise.sigma_c_sq <= constellation.beta() / (3.0 * g))
        .collect())
}

/// `(1 / MN) log2 det(I + H W W^H H^H / σ_c²)` in bits per symbol.
pub fn achievable_capacity(precoder: &CMatrix, h_c: &DdChannel, noise: &NoiseModel) -> Result<f64> {
    if precoder.nrows() != h_c.size() {
        return Err(Error::InvalidDimension(
            "precoder rows must match channel size".into(),
        ));
    }
    let hw = h_c.matrix() * precoder;
    let n = h_c.size();
    let mut m = (&hw * hw.adjoint()) / Complex64::new(noise.sigma_c_sq, 0.0);
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    let log_det = hpd_log_det(&m, "capacity determinant")?;
    Ok((log_det / std::f64::consts::LN_2 / n as f64).max(0.0))
}

/// Capacity upper bound by water-filling `p_t` over the eigenvalues of
/// `H^H H`.
pub fn water_filling_capacity(eigs_c: &[f64], p_t: f64, noise: &NoiseModel) -> f64 {
    let gains: Vec<f64> = eigs_c
        .iter()
        .map(|&l| l / noise.sigma_c_sq)
        .filter(|&g| g > 0.0)
        .collect();
    if gains.is_empty() || eigs_c.is_empty() {
        return 0.0;
    }
    let mut sorted = gains.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    // find the active set size from the strongest sub-channels down
    let mut level = 0.0;
    for active in (1..=sorted.len()).rev() {
        let inv_sum: f64 = sorted[..active].iter().map(|g| 1.0 / g).sum();
        let candidate = (p_t + inv_sum) / active as f64;
        if candidate > 1.0 / sorted[active - 1] {
            level = candidate;
            break;
        }
    }
    let bits: f64 = sorted.iter().map(|g| (level * g).max(1.0).log2()).sum();
    bits / eigs_c.len() as f64
}

/// Per-symbol MSE, SINR, and the two BER figures for a ZF receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMetrics {
    pub mse_per_symbol: DVector<f64>,
    pub sinr_per_symbol: DVector<f64>,
    pub average_ber: f64,
    pub ber_lower_bound: f64,
}

impl LinkMetrics {
    pub fn evaluate(
        precoder: &CMatrix,
        h_c: &DdChannel,
        noise: &NoiseModel,
        constellation: &QamConstellation,
    ) -> Result<Self> {
        let mse = zf_mse_matrix(precoder, h_c, noise)?
            .diagonal()
            .map(|z| z.re);
        let sinr = mse.map(|m| 1.0 / m);
        let average = average_ber(&sinr, constellation);
        let trace_inv = mse.sum() / noise.sigma_c_sq;
        let bound = ber_bound_from_trace(trace_inv, h_c.size(), noise, constellation);
        Ok(Self {
            mse_per_symbol: mse,
            sinr_per_symbol: sinr,
            average_ber: average,
            ber_lower_bound: bound,
        })
    }
}
