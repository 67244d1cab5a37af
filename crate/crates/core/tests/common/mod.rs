#![allow(dead_code)]
//! Independent reference computations shared by the integration tests.

use num_complex::Complex64;
use otfs_isac::linalg::{hermitian_eigen, hpd_inverse, reconstruct, CMatrix, CVector};
use otfs_isac::scenario::stream_rng;
use otfs_isac::{
    ChannelStatistics, DdChannel, DopplerUnit, NoiseModel, OtfsGrid, QamConstellation, Scenario,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const REFERENCE_M: usize = 8;
pub const REFERENCE_N: usize = 8;
pub const REFERENCE_DELTA_F: f64 = 2e3;
pub const REFERENCE_PT_DBM: f64 = 30.0;
pub const REFERENCE_GAMMA_C: f64 = 5e-5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 0)
}

pub fn cgauss<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| cgauss(rng))
}

pub fn random_vector<R: Rng>(rng: &mut R, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| cgauss(rng))
}

/// `A A^H + shift I`.
pub fn random_psd<R: Rng>(rng: &mut R, size: usize, shift: f64) -> CMatrix {
    let a = random_matrix(rng, size, size);
    &a * a.adjoint() + CMatrix::identity(size, size) * Complex64::new(shift, 0.0)
}

pub fn random_unitary<R: Rng>(rng: &mut R, size: usize) -> CMatrix {
    let (_, v) = hermitian_eigen(&random_psd(rng, size, 0.0));
    v
}

pub fn rel_err(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Reference-scale defaults: 8x8 grid, 2 kHz spacing, 3 paths with
/// `l_max = 4`, `k_max = 2`, unit noise powers, 4-QAM.
pub struct Instance {
    pub scenario: Scenario,
    pub h_c: DdChannel,
    pub h_dot: DdChannel,
    pub noise: NoiseModel,
    pub constellation: QamConstellation,
}

pub fn instance(m: usize, n: usize, seed: u64) -> Instance {
    let grid = OtfsGrid::new(m, n, REFERENCE_DELTA_F).unwrap();
    let max_delay = 4.min(m * n - 1);
    let stats = ChannelStatistics::new(3, max_delay, 2.0).unwrap();
    let scenario = Scenario::draw(grid, &stats, 1.0, &mut stream_rng(seed, 0)).unwrap();
    let h_c = scenario.comm_channel().unwrap();
    let h_dot = scenario.derivative_channel(DopplerUnit::Tap).unwrap();
    Instance {
        scenario,
        h_c,
        h_dot,
        noise: NoiseModel::from_dbm(0.0, 0.0).unwrap(),
        constellation: QamConstellation::new(4).unwrap(),
    }
}

pub fn reference_instance(seed: u64) -> Instance {
    instance(REFERENCE_M, REFERENCE_N, seed)
}

/// `∫_x^∞ φ(t) dt` by composite Simpson on `[x, x + 40]`.
pub fn q_quadrature(x: f64) -> f64 {
    let n = 200_000;
    let h = 40.0 / n as f64;
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(x) + phi(x + 40.0);
    for i in 1..n {
        let t = x + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * phi(t);
    }
    s * h / 3.0
}

/// Euclidean projection of `v` onto `{x ≥ 0, Σx = total}`.
pub fn simplex_projection(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - total) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn frob(a: &CMatrix, b: &CMatrix) -> f64 {
    a.dotc(b).re
}

/// Projection onto `{P ⪰ 0, tr P = p_t}` through the eigenvalues.
pub fn spectral_simplex_projection(x: &CMatrix, p_t: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(x);
    let proj = simplex_projection(vals.as_slice(), p_t);
    reconstruct(&vecs, &nalgebra::DVector::from_vec(proj))
}

/// Projection onto `{P ⪰ 0, tr P = p_t} ∩ {tr(P S) ≥ gamma}`.
///
/// The multiplier `ν ≥ 0` of the half-space enters as
/// `P(ν) = proj(X + ν S)`, and `tr(P(ν) S)` is nondecreasing in `ν`, so
/// `ν` is found by bisection.
pub fn project_feasible(x: &CMatrix, s: &CMatrix, p_t: f64, gamma: f64) -> CMatrix {
    let at = |nu: f64| spectral_simplex_projection(&(x + s * Complex64::new(nu, 0.0)), p_t);
    let p0 = at(0.0);
    if frob(&p0, s) >= gamma {
        return p0;
    }
    let mut hi = 1.0;
    while frob(&at(hi), s) < gamma {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if frob(&at(mid), s) < gamma {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    at(hi)
}

pub struct OracleResult {
    pub objective: f64,
    pub covariance: CMatrix,
    pub stationarity: f64,
    pub iterations: usize,
}

/// Projected gradient with Armijo backtracking on
/// `min tr(S_c⁻¹ P⁻¹)` over the feasible set of [`project_feasible`].
pub fn projected_gradient_oracle(
    s_c: &CMatrix,
    s_s: &CMatrix,
    p_t: f64,
    gamma: f64,
    start: &CMatrix,
) -> OracleResult {
    let c_inv = hpd_inverse(s_c, "S_c").unwrap();
    let f = |p: &CMatrix| -> f64 {
        match hpd_inverse(p, "P") {
            Ok(pi) => (&c_inv * pi).trace().re,
            Err(_) => f64::INFINITY,
        }
    };
    let grad = |p: &CMatrix| -> CMatrix {
        let pi = hpd_inverse(p, "P").unwrap();
        let g = -(&pi * &c_inv * &pi);
        (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
    };
    let mut p = project_feasible(start, s_s, p_t, gamma);
    let mut fp = f(&p);
    let mut step = 1.0f64;
    let mut stationarity = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..200_000 {
        iterations = it;
        let g = grad(&p);
        let unit = p.norm() / g.norm();
        let mapped = project_feasible(&(&p - &g * Complex64::new(unit, 0.0)), s_s, p_t, gamma);
        stationarity = (&p - &mapped).norm() / p.norm();
        if stationarity < 1e-8 {
            break;
        }
        let dir = tangent_direction(&g, s_s, frob(&p, s_s) <= gamma * (1.0 + 1e-12));
        let dir_unit = p.norm() / dir.norm();
        let mut t = (step * 2.0).min(1e6);
        loop {
            let cand = project_feasible(
                &(&p - &dir * Complex64::new(t * dir_unit, 0.0)),
                s_s,
                p_t,
                gamma,
            );
            let fc = f(&cand);
            // Once the decrease drops below the rounding of `f`, convexity
            // still certifies `f(cand) ≤ f(p)` whenever the slope at `cand`
            // along the step is non-positive.
            let armijo = fc <= fp + 1e-4 * frob(&g, &(&cand - &p));
            if fc.is_finite() && (armijo || frob(&grad(&cand), &dir) >= 0.0) {
                p = cand;
                fp = fc;
                step = t;
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                return OracleResult {
                    objective: fp,
                    covariance: p,
                    stationarity,
                    iterations,
                };
            }
        }
    }
    OracleResult {
        objective: fp,
        covariance: p,
        stationarity,
        iterations,
    }
}

/// `g` with its component along `I` removed, and also along `S` when the
/// sensing constraint is active and `-g` points out of the feasible set.
/// Steps along this direction keep the affine constraints up to rounding,
/// so the projection only cleans up residuals.
fn tangent_direction(g: &CMatrix, s: &CMatrix, sensing_active: bool) -> CMatrix {
    let n = g.nrows() as f64;
    let eye = CMatrix::identity(g.nrows(), g.ncols());
    let remove_identity = |m: &CMatrix| m - &eye * Complex64::new(m.trace().re / n, 0.0);
    let d = remove_identity(g);
    if !sensing_active {
        return d;
    }
    let s0 = remove_identity(s);
    let coef = frob(&d, &s0) / frob(&s0, &s0);
    if coef > 0.0 {
        d - s0 * Complex64::new(coef, 0.0)
    } else {
        d
    }
}

/// Prints one line per acceptance criterion and returns whether it passed.
pub fn report(id: &str, pass: bool, detail: impl std::fmt::Display) -> bool {
    println!(
        "criterion {id}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}
