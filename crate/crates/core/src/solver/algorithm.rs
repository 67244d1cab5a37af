use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use super::closed_form::check_power;
use super::covariance::{DualPoint, DualProblem};
use super::ellipsoid::{ellipsoid_step, EllipsoidState};
use super::equalize::{construct_v, feasibility_check};
use super::{ber_only_precoder, eigen_basis, DualPair, EigenBasis, GammaRange, PrecoderSolution};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hpd_inverse, scale_columns, CMatrix};
use crate::metrics::NoiseModel;
use crate::otfs::DdChannel;
use crate::qam::QamConstellation;

/// Starting ellipsoid for the dual search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EllipsoidInit {
    /// Circumscribes a box `[0, λ_ub] x [0, μ_ub]` that provably contains the
    /// dual optimum. `μ_ub` comes from the objective of a feasible mixture of
    /// the BER-only and CRB-only covariances.
    BoundingBox,
    /// Centered at `(μ₀ / 2Ξ₁, μ₀)` with `μ₀` the unconstrained power price,
    /// radius `radius_factor * max(λ₀, μ₀)`.
    Heuristic { radius_factor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub p_t: f64,
    /// Fisher-information threshold `σ_s² / γ_c`.
    pub gamma_1: f64,
    pub xi_0: f64,
    /// `None` uses [`default_max_iters`].
    pub max_iters: Option<usize>,
    pub init: EllipsoidInit,
}

impl SolverConfig {
    pub fn new(p_t: f64, gamma_1: f64) -> Self {
        Self {
            p_t,
            gamma_1,
            xi_0: 1e-3,
            max_iters: None,
            init: EllipsoidInit::BoundingBox,
        }
    }

    /// Threshold from a CRB limit `γ_c`: `γ₁ = σ_s² / γ_c`.
    pub fn from_crb_limit(p_t: f64, gamma_c: f64, noise: &NoiseModel) -> Result<Self> {
        if !(gamma_c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "CRB limit must be positive, got {gamma_c}"
            )));
        }
        Ok(Self::new(p_t, noise.sigma_s_sq() / gamma_c))
    }

    pub fn with_tolerance(mut self, xi_0: f64) -> Self {
        self.xi_0 = xi_0;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = Some(max_iters);
        self
    }

    pub fn with_init(mut self, init: EllipsoidInit) -> Self {
        self.init = init;
        self
    }

    fn validate(&self) -> Result<()> {
        check_power(self.p_t)?;
        if !(self.xi_0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.xi_0
            )));
        }
        if !self.gamma_1.is_finite() || self.gamma_1 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sensing threshold must be finite and nonnegative, got {}",
                self.gamma_1
            )));
        }
        if let EllipsoidInit::Heuristic { radius_factor } = self.init {
            if !(radius_factor > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "ellipsoid radius factor must be positive, got {radius_factor}"
                )));
            }
        }
        Ok(())
    }
}

/// `10 ⌈ln(1/ξ₀) MN⌉`.
pub fn default_max_iters(xi_0: f64, frame_size: usize) -> usize {
    10 * ((1.0 / xi_0).ln().max(1.0) * frame_size as f64).ceil() as usize
}

/// One dual evaluation of the ellipsoid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lambda: f64,
    pub mu: f64,
    /// Dual function value `D(λ, μ)`.
    pub lagrangian: f64,
    pub objective: f64,
    pub power: f64,
    pub sensing_trace: f64,
    /// `√(dᵀ B⁻¹ d)` before the update.
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    /// Ellipsoid updates, including domain cuts.
    pub iterations: usize,
    pub objective_evaluations: usize,
    pub domain_cuts: usize,
    pub final_measure: f64,
    /// `tr P*` before rescaling to the budget.
    pub raw_power: f64,
    /// `tr(P S_s)` of the returned covariance.
    pub sensing_trace: f64,
    /// Weight `t` of the CRB-only direction mixed into the rescaled `P*`
    /// when it fell short of `γ₁`; zero when no correction was needed.
    pub sensing_blend: f64,
    /// `|λ (tr(P* S_s) − γ₁)|`.
    pub slackness_sensing: f64,
    /// `|μ (tr P* − P_T)|`.
    pub slackness_power: f64,
    pub gamma_range: GammaRange,
    pub trace: Vec<IterationRecord>,
}

/// Caches the channel eigenbases and the `γ₁` range so that several
/// thresholds or budgets can be solved on one channel pair.
#[derive(Debug, Clone)]
pub struct DualSolver {
    problem: DualProblem,
    /// `Ξ₁`-independent part of the range: `γ_min / P_T`.
    gamma_min_per_watt: f64,
}

impl DualSolver {
    pub fn new(h_c: &DdChannel, h_dot: &DdChannel) -> Result<Self> {
        if h_c.size() != h_dot.size() {
            return Err(Error::InvalidDimension(format!(
                "communication channel is {0}x{0}, derivative channel {1}x{1}",
                h_c.size(),
                h_dot.size()
            )));
        }
        let comm = eigen_basis(&h_c.gram())?;
        let sensing = eigen_basis(&h_dot.gram())?;
        Self::from_bases(comm, sensing)
    }

    pub fn from_bases(comm: EigenBasis, sensing: EigenBasis) -> Result<Self> {
        if !(sensing.leading_value() > 0.0) {
            return Err(Error::UnboundedCrb);
        }
        let problem = DualProblem::new(comm, sensing)?;
        let ber_only = ber_only_precoder(problem.comm(), 1.0)?;
        let gamma_min_per_watt = sensing_trace(&ber_only.covariance, problem.sensing());
        Ok(Self {
            problem,
            gamma_min_per_watt,
        })
    }

    pub fn comm(&self) -> &EigenBasis {
        self.problem.comm()
    }

    pub fn sensing(&self) -> &EigenBasis {
        self.problem.sensing()
    }

    pub fn problem(&self) -> &DualProblem {
        &self.problem
    }

    pub fn gamma_range(&self, p_t: f64) -> GammaRange {
        let max = p_t * self.problem.xi1();
        GammaRange {
            min: (p_t * self.gamma_min_per_watt).min(max),
            max,
        }
    }

    /// Runs the dual ellipsoid search and assembles `W = U Σ V`.
    ///
    /// `γ₁` must lie in `[γ_min, γ_max)`; at `γ_max` the optimum is the
    /// rank-one CRB-only design and the dual optimum is unbounded.
    pub fn solve(
        &self,
        config: &SolverConfig,
        constellation: &QamConstellation,
        noise: &NoiseModel,
    ) -> Result<PrecoderSolution> {
        config.validate()?;
        let p_t = config.p_t;
        let gamma_1 = config.gamma_1;
        let range = self.gamma_range(p_t);
        let slack = 1e-9 * range.max;
        if gamma_1 < range.min - slack || gamma_1 >= range.max {
            return Err(Error::GammaOutOfRange {
                gamma: gamma_1,
                min: range.min,
                max: range.max,
            });
        }

        let n = self.comm().size();
        let xi1 = self.problem.xi1();
        let max_iters = config
            .max_iters
            .unwrap_or_else(|| default_max_iters(config.xi_0, n));
        let mut state = self.initial_ellipsoid(config, &range)?;
        let mut trace = Vec::new();
        let mut domain_cuts = 0;
        let mut converged: Option<(DualPoint, f64)> = None;

        while state.iteration < max_iters {
            let (lambda, nu) = (state.lambda(), state.nu());
            if lambda < 0.0 {
                state = ellipsoid_step(&state, Vector2::new(-1.0, 0.0))?;
                domain_cuts += 1;
                continue;
            }
            if !(nu > 0.0) {
                state = ellipsoid_step(&state, Vector2::new(0.0, -1.0))?;
                domain_cuts += 1;
                continue;
            }
            let point = self.problem.evaluate_gap(lambda, nu)?;
            // gradient in (λ, ν) from the one in (λ, μ)
            let [g_lambda, g_mu] = point.subgradient(gamma_1, p_t);
            let d = Vector2::new(g_lambda + xi1 * g_mu, g_mu);
            let measure = state.width_along(&d);
            trace.push(IterationRecord {
                iteration: state.iteration,
                lambda,
                mu: point.mu,
                lagrangian: point.dual_value(gamma_1, p_t),
                objective: point.objective,
                power: point.power,
                sensing_trace: point.sensing_trace,
                measure,
            });
            if measure < config.xi_0 {
                converged = Some((point, measure));
                break;
            }
            // the dual is maximized: keep the half-plane where D increases
            state = match ellipsoid_step(&state, -d) {
                Ok(next) => next,
                Err(Error::ZeroSubgradient) => {
                    converged = Some((point, 0.0));
                    break;
                }
                Err(e) => return Err(e),
            };
        }

        let Some((point, final_measure)) = converged else {
            let measure = trace.last().map_or(f64::INFINITY, |r| r.measure);
            return Err(Error::NoConvergence {
                iterations: state.iteration,
                measure,
                state,
            });
        };

        let raw = self.problem.covariance(&point);
        let scale = p_t / raw.trace().re;
        let mut covariance = &raw * Complex64::new(scale, 0.0);
        // near-optimal duals can leave tr(P S_s) slightly below γ₁; move
        // towards P_T w_s,1 w_s,1^H, which reaches γ_max > γ₁, until it holds
        let reached = sensing_trace(&covariance, self.sensing());
        let sensing_blend = if reached < gamma_1 {
            let t = (gamma_1 - reached) / (range.max - reached);
            let ws = self.sensing().leading_vector();
            covariance = &covariance * Complex64::new(1.0 - t, 0.0)
                + &ws * ws.adjoint() * Complex64::new(t * p_t, 0.0);
            t
        } else {
            0.0
        };
        let (values, u) = hermitian_eigen(&covariance);
        let sigma = values.map(|v| v.max(0.0).sqrt());

        let z_c = u.adjoint() * self.comm().gram() * &u;
        let feasible = feasibility_check(&sigma, &z_c, constellation, noise);
        let v = if feasible {
            Some(construct_v(&sigma, &z_c)?)
        } else {
            None
        };
        let g = scale_columns(&scale_columns(&z_c, &sigma).transpose(), &sigma).transpose();
        let objective =
            hpd_inverse(&g, "Sigma Z_c Sigma").map_or(f64::INFINITY, |inv| inv.trace().re);

        let diagnostics = SolveDiagnostics {
            iterations: state.iteration,
            objective_evaluations: trace.len(),
            domain_cuts,
            final_measure,
            raw_power: point.power,
            sensing_trace: sensing_trace(&covariance, self.sensing()),
            sensing_blend,
            slackness_sensing: (point.lambda * (point.sensing_trace - gamma_1)).abs(),
            slackness_power: (point.mu * (point.power - p_t)).abs(),
            gamma_range: range,
            trace,
        };
        Ok(PrecoderSolution {
            u,
            sigma,
            v,
            covariance,
            duals: Some(DualPair {
                lambda: point.lambda,
                mu: point.mu,
            }),
            feasible: Some(feasible),
            objective,
            diagnostics: Some(diagnostics),
        })
    }

    /// `U Σ V` with the MSE-balancing `V`, built even when the convexity
    /// test failed and the solution carries no `V`.
    pub fn balanced_precoder(&self, solution: &PrecoderSolution) -> Result<CMatrix> {
        if let Some(w) = solution.precoder() {
            return Ok(w);
        }
        let z_c = solution.u.adjoint() * self.comm().gram() * &solution.u;
        let v = construct_v(&solution.sigma, &z_c)?;
        Ok(scale_columns(&solution.u, &solution.sigma) * v)
    }

    fn initial_ellipsoid(
        &self,
        config: &SolverConfig,
        range: &GammaRange,
    ) -> Result<EllipsoidState> {
        let p_t = config.p_t;
        let xi1 = self.problem.xi1();
        let inv_sqrt_sum: f64 = self.comm().values().iter().map(|v| v.powf(-0.5)).sum();
        let mu_0 = (inv_sqrt_sum / p_t).powi(2);
        match config.init {
            EllipsoidInit::Heuristic { radius_factor } => {
                let lambda_0 = mu_0 / (2.0 * xi1);
                let rho = radius_factor * mu_0.max(lambda_0);
                to_gap_coordinates(
                    Vector2::new(lambda_0, mu_0),
                    Matrix2::identity() * (rho * rho),
                    xi1,
                )
            }
            EllipsoidInit::BoundingBox => {
                // f* <= f(P_t) for the feasible mixture P_t, and
                // mu* P_T - lambda* gamma_1 = f* with lambda* <= mu* / xi_1.
                let f_ub = self.mixture_objective(p_t, config.gamma_1, range)?;
                let mu_ub = f_ub / (p_t * (1.0 - config.gamma_1 / range.max));
                let lambda_ub = mu_ub / xi1;
                let (a, b) = (0.5 * lambda_ub, 0.5 * mu_ub);
                to_gap_coordinates(
                    Vector2::new(a, b),
                    Matrix2::new(2.0 * a * a, 0.0, 0.0, 2.0 * b * b),
                    xi1,
                )
            }
        }
    }

    /// Objective of `(1 − t) P_ber + t P_T w_s,1 w_s,1^H` with `t` chosen to
    /// meet `γ₁`.
    fn mixture_objective(&self, p_t: f64, gamma_1: f64, range: &GammaRange) -> Result<f64> {
        let ber_only = ber_only_precoder(self.comm(), p_t)?;
        let width = range.max - range.min;
        let t = if width > 0.0 {
            ((gamma_1 - range.min) / width).clamp(0.0, 1.0)
        } else {
            0.0
        };
        if t == 0.0 {
            return Ok(ber_only.objective);
        }
        let ws = self.sensing().leading_vector();
        let mixture = &ber_only.covariance * Complex64::new(1.0 - t, 0.0)
            + &ws * ws.adjoint() * Complex64::new(t * p_t, 0.0);
        let p_inv = hpd_inverse(&mixture, "feasible mixture covariance")?;
        let c_inv = self.comm().apply(|v| 1.0 / v);
        Ok((p_inv * c_inv).trace().re)
    }
}

/// Maps an ellipsoid over `(λ, μ)` to `(λ, ν = μ − λΞ₁)`. The ellipsoid
/// method is affine invariant, so the iterates are the same ones, expressed
/// in coordinates that resolve the edge `μ = λΞ₁` finely.
fn to_gap_coordinates(
    center: Vector2<f64>,
    shape_inverse: Matrix2<f64>,
    xi1: f64,
) -> Result<EllipsoidState> {
    let t = Matrix2::new(1.0, 0.0, -xi1, 1.0);
    EllipsoidState::new(t * center, t * shape_inverse * t.transpose())
}

fn sensing_trace(p: &CMatrix, sensing: &EigenBasis) -> f64 {
    sensing.gram().dotc(p).re
}

/// Builds the channel bases and runs [`DualSolver::solve`].
pub fn solve_algorithm1(
    h_c: &DdChannel,
    h_dot: &DdChannel,
    config: &SolverConfig,
    constellation: &QamConstellation,
    noise: &NoiseModel,
) -> Result<PrecoderSolution> {
    DualSolver::new(h_c, h_dot)?.solve(config, constellation, noise)
}
