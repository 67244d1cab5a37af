//! The six experiment kinds. Each channel realization is independent and
//! runs on the rayon pool; rows come back in realization order, so output is
//! identical for any thread count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use num_complex::Complex64;
use otfs_isac::metrics::{
    achievable_capacity, average_ber, ber_lower_bound, ber_only_lower_bound_k, compute_crb,
    dbm_to_linear, equalizer_diagonal, q_function, sinr_per_symbol, water_filling_capacity,
};
use otfs_isac::scenario::stream_rng;
use otfs_isac::solver::{ber_only_precoder, single_symbol_precoder};
use otfs_isac::{
    simulate_ber, CMatrix, ChannelStatistics, DdChannel, DopplerUnit, DualSolver, Equalizer,
    NoiseModel, OtfsGrid, PrecoderSolution, QamConstellation, Scenario, SimConfig, SolverConfig,
};
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::config::{BaselinePower, ConfigError, CrbUnit, ExperimentKind, ExperimentSpec};
use crate::table::Table;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("numerical failure at {context}: {source}")]
    Numerical {
        context: String,
        source: otfs_isac::Error,
        /// Solver state at the failure, written next to the outputs.
        dump: serde_json::Value,
    },

    #[error("cannot write {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },

    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } => 3,
            RunError::Io { .. } | RunError::Csv(_) => 1,
        }
    }
}

/// Tables plus bookkeeping for the manifest.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub infeasible_points: usize,
    pub gate_failures: usize,
    /// Wall-clock seconds of every dual solve, in realization order.
    pub solve_seconds: Vec<f64>,
}

struct Setup<'a> {
    spec: &'a ExperimentSpec,
    grid: OtfsGrid,
    stats: ChannelStatistics,
    noise: NoiseModel,
    constellation: QamConstellation,
    unit: DopplerUnit,
}

struct Realization {
    index: usize,
    h_c: DdChannel,
    h_dot: DdChannel,
    solver: DualSolver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok,
    /// `γ₁` below the BER-only sensing level; raised to it, constraint inactive.
    Inactive,
    Infeasible,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Inactive => "inactive",
            Status::Infeasible => "infeasible",
        }
    }
}

struct Design {
    status: Status,
    solution: Option<PrecoderSolution>,
    precoder: Option<CMatrix>,
    solve_seconds: Option<f64>,
}

impl Design {
    fn gate(&self) -> String {
        self.solution
            .as_ref()
            .and_then(|s| s.feasible)
            .map_or(String::new(), |g| g.to_string())
    }
}

#[derive(Default)]
struct Partial {
    rows: Vec<Vec<String>>,
    infeasible: usize,
    gate_failures: usize,
    solve_seconds: Vec<f64>,
}

impl Partial {
    fn record(&mut self, design: &Design) {
        if design.status == Status::Infeasible {
            self.infeasible += 1;
        }
        if design.solution.as_ref().and_then(|s| s.feasible) == Some(false) {
            self.gate_failures += 1;
        }
        self.solve_seconds.extend(design.solve_seconds);
    }
}

/// Shortest round-trip form, with an exponent for very large or small values.
pub(crate) fn num(x: f64) -> String {
    format!("{x:?}")
}

fn blank() -> String {
    String::new()
}

fn point_context(r: usize, p_dbm: f64, gamma_c: f64) -> String {
    format!("realization {r}, P_T = {p_dbm} dBm, gamma_c = {gamma_c}")
}

fn numerical(context: String, source: otfs_isac::Error, mut dump: serde_json::Value) -> RunError {
    dump["context"] = json!(context);
    dump["error"] = json!(source.to_string());
    if let otfs_isac::Error::NoConvergence {
        iterations,
        measure,
        state,
    } = &source
    {
        dump["last_state"] = json!({
            "iterations": iterations,
            "measure": measure,
            // ellipsoid coordinates: lambda and nu = mu - lambda * xi_1
            "lambda": state.center[0],
            "nu": state.center[1],
            "shape_inverse": [
                [state.shape_inverse[(0, 0)], state.shape_inverse[(0, 1)]],
                [state.shape_inverse[(1, 0)], state.shape_inverse[(1, 1)]],
            ],
        });
    }
    RunError::Numerical {
        context,
        source,
        dump,
    }
}

/// Mixes the run seed with a point and scheme index into a Monte-Carlo seed.
pub fn mc_seed(seed: u64, realization: usize, point: usize, scheme: usize) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let tag = ((realization as u64) << 32) | ((point as u64) << 8) | scheme as u64;
    splitmix(seed ^ splitmix(tag))
}

impl<'a> Setup<'a> {
    fn new(spec: &'a ExperimentSpec) -> Result<Self, RunError> {
        spec.validate()?;
        let config = |field: &'static str, e: otfs_isac::Error| ConfigError::Invalid {
            field,
            reason: e.to_string(),
        };
        let grid = OtfsGrid::new(spec.grid.m, spec.grid.n, spec.grid.delta_f_hz)
            .map_err(|e| config("grid", e))?;
        let stats = ChannelStatistics::new(
            spec.channel.paths,
            spec.channel.max_delay_tap,
            spec.channel.max_doppler_tap,
        )
        .map_err(|e| config("channel", e))?;
        stats.check_grid(&grid).map_err(|e| config("channel", e))?;
        let noise = NoiseModel::from_dbm(spec.noise.sigma_c_dbm, spec.noise.sigma_s_dbm)
            .map_err(|e| config("noise", e))?;
        let constellation =
            QamConstellation::new(spec.qam_order).map_err(|e| config("qam_order", e))?;
        let unit = match spec.channel.crb_unit {
            CrbUnit::DopplerTap => DopplerUnit::Tap,
            CrbUnit::Hertz => DopplerUnit::Hertz,
        };
        Ok(Self {
            spec,
            grid,
            stats,
            noise,
            constellation,
            unit,
        })
    }

    fn frame_size(&self) -> usize {
        self.grid.size()
    }

    /// Channel realization `r` is drawn from stream `r` of the run seed.
    fn realization(&self, r: usize) -> Result<Realization, RunError> {
        let fail = |e: otfs_isac::Error| {
            numerical(
                format!("realization {r}"),
                e,
                json!({ "realization": r, "seed": self.spec.seed }),
            )
        };
        let mut rng = stream_rng(self.spec.seed, r as u64);
        let scenario = Scenario::draw(
            self.grid,
            &self.stats,
            self.spec.channel.target_gain,
            &mut rng,
        )
        .map_err(fail)?;
        let h_c = scenario.comm_channel().map_err(fail)?;
        let h_dot = scenario.derivative_channel(self.unit).map_err(fail)?;
        let solver = DualSolver::new(&h_c, &h_dot).map_err(fail)?;
        Ok(Realization {
            index: r,
            h_c,
            h_dot,
            solver,
        })
    }

    fn baseline(&self, p_t: f64) -> CMatrix {
        let n = self.frame_size();
        let scale = match self.spec.baseline_power {
            BaselinePower::Unit => 1.0,
            BaselinePower::Budget => (p_t / n as f64).sqrt(),
        };
        CMatrix::identity(n, n) * Complex64::new(scale, 0.0)
    }

    fn sim(&self, seed: u64, equalizer: Equalizer) -> SimConfig {
        let target = match self.spec.monte_carlo.target_errors {
            0 => None,
            t => Some(t),
        };
        SimConfig::new(
            self.spec.monte_carlo.blocks,
            seed,
            self.constellation.clone(),
            self.noise,
        )
        .with_equalizer(equalizer)
        .with_target_errors(target)
    }

    fn design(&self, real: &Realization, p_dbm: f64, gamma_c: f64) -> Result<Design, RunError> {
        let p_t = dbm_to_linear(p_dbm);
        let gamma_1 = self.noise.sigma_s_sq() / gamma_c;
        let range = real.solver.gamma_range(p_t);
        let infeasible = Design {
            status: Status::Infeasible,
            solution: None,
            precoder: None,
            solve_seconds: None,
        };
        if gamma_1 >= range.max {
            return Ok(infeasible);
        }
        let (status, gamma) = if gamma_1 < range.min {
            (Status::Inactive, range.min)
        } else {
            (Status::Ok, gamma_1)
        };
        let mut config = SolverConfig::new(p_t, gamma).with_tolerance(self.spec.solver.xi_0);
        if let Some(cap) = self.spec.solver.max_iters {
            config = config.with_max_iters(cap);
        }
        let context = point_context(real.index, p_dbm, gamma_c);
        let dump = json!({
            "seed": self.spec.seed,
            "realization": real.index,
            "p_t": p_t,
            "gamma_1": gamma,
            "gamma_range": [range.min, range.max],
        });
        let start = Instant::now();
        let solution = match real.solver.solve(&config, &self.constellation, &self.noise) {
            Ok(s) => s,
            Err(otfs_isac::Error::GammaOutOfRange { .. }) => return Ok(infeasible),
            Err(e) => return Err(numerical(context, e, dump)),
        };
        let solve_seconds = start.elapsed().as_secs_f64();
        let precoder = real
            .solver
            .balanced_precoder(&solution)
            .map_err(|e| numerical(context, e, dump))?;
        Ok(Design {
            status,
            solution: Some(solution),
            precoder: Some(precoder),
            solve_seconds: Some(solve_seconds),
        })
    }

    /// `(P_T dBm, γ_c)` pairs, power-major.
    fn points(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for &p in &self.spec.power_dbm {
            for &g in &self.spec.gamma_c {
                pts.push((p, g));
            }
        }
        pts
    }

    fn lib_err(
        &self,
        real: &Realization,
        p_dbm: f64,
        gamma_c: f64,
    ) -> impl Fn(otfs_isac::Error) -> RunError + '_ {
        let context = point_context(real.index, p_dbm, gamma_c);
        let seed = self.spec.seed;
        let r = real.index;
        move |e| {
            numerical(
                context.clone(),
                e,
                json!({ "seed": seed, "realization": r }),
            )
        }
    }
}

const CONVERGENCE_HEADER: &[&str] = &[
    "seed",
    "realization",
    "p_t_dbm",
    "gamma_c",
    "status",
    "iteration",
    "lagrangian",
    "objective",
    "lambda",
    "mu",
    "power",
    "sensing_trace",
    "measure",
];

fn convergence(setup: &Setup, real: &Realization) -> Result<Partial, RunError> {
    let mut out = Partial::default();
    let seed = setup.spec.seed.to_string();
    for (p_dbm, gamma_c) in setup.points() {
        let design = setup.design(real, p_dbm, gamma_c)?;
        out.record(&design);
        let lead = [
            seed.clone(),
            real.index.to_string(),
            num(p_dbm),
            num(gamma_c),
            design.status.label().into(),
        ];
        let trace = design
            .solution
            .as_ref()
            .and_then(|s| s.diagnostics.as_ref())
            .map(|d| d.trace.as_slice())
            .unwrap_or_default();
        if trace.is_empty() {
            let mut row = lead.to_vec();
            row.extend(std::iter::repeat_with(blank).take(8));
            out.rows.push(row);
        }
        for rec in trace {
            let mut row = lead.to_vec();
            row.extend([
                rec.iteration.to_string(),
                num(rec.lagrangian),
                num(rec.objective),
                num(rec.lambda),
                num(rec.mu),
                num(rec.power),
                num(rec.sensing_trace),
                num(rec.measure),
            ]);
            out.rows.push(row);
        }
    }
    Ok(out)
}

const BER_HEADER: &[&str] = &[
    "seed",
    "realization",
    "mc_seed",
    "p_t_dbm",
    "gamma_c",
    "scheme",
    "status",
    "convexity_gate",
    "analytic_ber",
    "empirical_ber",
    "ci95",
    "bits",
];

fn ber_vs_power(setup: &Setup, real: &Realization) -> Result<Partial, RunError> {
    let mut out = Partial::default();
    let seed = setup.spec.seed;
    let (h, noise, q) = (&real.h_c, &setup.noise, &setup.constellation);
    let mut point = 0;
    for (pi, &p_dbm) in setup.spec.power_dbm.iter().enumerate() {
        let p_t = dbm_to_linear(p_dbm);
        let err = setup.lib_err(real, p_dbm, f64::NAN);
        let baseline = setup.baseline(p_t);
        let ber_only = ber_only_precoder(real.solver.comm(), p_t)
            .map_err(&err)?
            .precoder()
            .expect("closed form carries V");
        // benchmarks do not depend on γ_c: simulated once per power
        let mut fixed = Vec::new();
        for (scheme, w, eq, idx) in [
            ("zf", &baseline, Equalizer::ZeroForcing, 1),
            ("mmse", &baseline, Equalizer::Mmse, 2),
            ("lower-bound", &ber_only, Equalizer::ZeroForcing, 3),
        ] {
            let sinr = sinr_per_symbol(w, h, noise, eq).map_err(&err)?;
            let analytic = average_ber(&sinr, q);
            let s = mc_seed(seed, real.index, pi, idx);
            let est = simulate_ber(h, w, &setup.sim(s, eq)).map_err(&err)?;
            fixed.push((scheme, s, analytic, est));
        }
        for &gamma_c in &setup.spec.gamma_c {
            let design = setup.design(real, p_dbm, gamma_c)?;
            out.record(&design);
            let lead = |mc: String, scheme: &str, status: &str, gate: String| {
                vec![
                    seed.to_string(),
                    real.index.to_string(),
                    mc,
                    num(p_dbm),
                    num(gamma_c),
                    scheme.to_string(),
                    status.to_string(),
                    gate,
                ]
            };
            match &design.precoder {
                Some(w) => {
                    let err = setup.lib_err(real, p_dbm, gamma_c);
                    let sinr =
                        sinr_per_symbol(w, h, noise, Equalizer::ZeroForcing).map_err(&err)?;
                    let s = mc_seed(seed, real.index, setup.spec.power_dbm.len() + point, 0);
                    let est =
                        simulate_ber(h, w, &setup.sim(s, Equalizer::ZeroForcing)).map_err(&err)?;
                    let mut row = lead(
                        s.to_string(),
                        "proposed",
                        design.status.label(),
                        design.gate(),
                    );
                    row.extend([
                        num(average_ber(&sinr, q)),
                        num(est.ber),
                        num(est.ci95_halfwidth),
                        est.bits_total.to_string(),
                    ]);
                    out.rows.push(row);
                }
                None => {
                    let mut row = lead(blank(), "proposed", design.status.label(), blank());
                    row.extend(std::iter::repeat_with(blank).take(4));
                    out.rows.push(row);
                }
            }
            for (scheme, s, analytic, est) in &fixed {
                let mut row = lead(s.to_string(), scheme, "ok", blank());
                row.extend([
                    num(*analytic),
                    num(est.ber),
                    num(est.ci95_halfwidth),
                    est.bits_total.to_string(),
                ]);
                out.rows.push(row);
            }
            point += 1;
        }
    }
    Ok(out)
}

const DIAG_HEADER: &[&str] = &[
    "seed",
    "realization",
    "p_t_dbm",
    "gamma_c",
    "scheme",
    "status",
    "index",
    "diag_value",
];

fn diag_elements(setup: &Setup, real: &Realization) -> Result<Partial, RunError> {
    let mut out = Partial::default();
    for (p_dbm, gamma_c) in setup.points() {
        let err = setup.lib_err(real, p_dbm, gamma_c);
        let design = setup.design(real, p_dbm, gamma_c)?;
        out.record(&design);
        let baseline = setup.baseline(dbm_to_linear(p_dbm));
        let schemes = [
            (
                "proposed",
                design.precoder.as_ref(),
                Equalizer::ZeroForcing,
                design.status,
            ),
            ("zf", Some(&baseline), Equalizer::ZeroForcing, Status::Ok),
            ("mmse", Some(&baseline), Equalizer::Mmse, Status::Ok),
        ];
        for (scheme, w, eq, status) in schemes {
            let lead = vec![
                setup.spec.seed.to_string(),
                real.index.to_string(),
                num(p_dbm),
                num(gamma_c),
                scheme.to_string(),
                status.label().to_string(),
            ];
            let Some(w) = w else {
                let mut row = lead;
                row.extend([blank(), blank()]);
                out.rows.push(row);
                continue;
            };
            let diag = equalizer_diagonal(w, &real.h_c, &setup.noise, eq).map_err(&err)?;
            for (i, d) in diag.iter().enumerate() {
                let mut row = lead.clone();
                row.extend([i.to_string(), num(*d)]);
                out.rows.push(row);
            }
        }
    }
    Ok(out)
}

const CRB_HEADER: &[&str] = &[
    "seed",
    "realization",
    "gamma_c",
    "p_t_dbm",
    "status",
    "convexity_gate",
    "ber",
    "ber_lower_bound",
    "crb",
];

fn ber_vs_crb(setup: &Setup, real: &Realization) -> Result<Partial, RunError> {
    let mut out = Partial::default();
    for &gamma_c in &setup.spec.gamma_c {
        for &p_dbm in &setup.spec.power_dbm {
            let err = setup.lib_err(real, p_dbm, gamma_c);
            let design = setup.design(real, p_dbm, gamma_c)?;
            out.record(&design);
            let mut row = vec![
                setup.spec.seed.to_string(),
                real.index.to_string(),
                num(gamma_c),
                num(p_dbm),
                design.status.label().to_string(),
                design.gate(),
            ];
            match &design.precoder {
                Some(w) => {
                    let sinr = sinr_per_symbol(w, &real.h_c, &setup.noise, Equalizer::ZeroForcing)
                        .map_err(&err)?;
                    row.extend([
                        num(average_ber(&sinr, &setup.constellation)),
                        num(
                            ber_lower_bound(w, &real.h_c, &setup.noise, &setup.constellation)
                                .map_err(&err)?,
                        ),
                        num(compute_crb(w, &real.h_dot, &setup.noise).map_err(&err)?),
                    ]);
                }
                None => row.extend([blank(), blank(), blank()]),
            }
            out.rows.push(row);
        }
    }
    Ok(out)
}

const SYMBOL_HEADER: &[&str] = &[
    "seed",
    "realization",
    "p_t_dbm",
    "gamma_c",
    "k",
    "status",
    "ber_lb",
    "crb",
    "capacity",
    "ber_only_lb",
];

fn symbol_sweep(setup: &Setup, real: &Realization) -> Result<Partial, RunError> {
    let mut out = Partial::default();
    let n = setup.frame_size();
    let eigs: Vec<f64> = real.solver.comm().values().iter().copied().collect();
    let (noise, q) = (&setup.noise, &setup.constellation);
    for (p_dbm, gamma_c) in setup.points() {
        let err = setup.lib_err(real, p_dbm, gamma_c);
        let p_t = dbm_to_linear(p_dbm);
        let gamma_1 = noise.sigma_s_sq() / gamma_c;
        let design = setup.design(real, p_dbm, gamma_c)?;
        out.record(&design);

        // single-symbol design: one beamformer carrying the whole budget
        let xi1 = real.solver.sensing().leading_value();
        let single = if gamma_1 <= p_t * xi1 {
            let w = single_symbol_precoder(real.solver.comm(), real.solver.sensing(), gamma_1, p_t)
                .map_err(&err)?;
            let w = CMatrix::from_column_slice(n, 1, w.as_slice());
            let snr = (real.h_c.matrix() * &w).norm_squared() / noise.sigma_c_sq();
            let ber = q.alpha() * q_function((q.beta() * snr).sqrt());
            let crb = compute_crb(&w, &real.h_dot, noise).map_err(&err)?;
            let cap = achievable_capacity(&w, &real.h_c, noise).map_err(&err)?;
            Some((Status::Ok, [num(ber), num(crb), num(cap)]))
        } else {
            None
        };
        let full = match &design.precoder {
            Some(w) => Some((
                design.status,
                [
                    num(ber_lower_bound(w, &real.h_c, noise, q).map_err(&err)?),
                    num(compute_crb(w, &real.h_dot, noise).map_err(&err)?),
                    num(achievable_capacity(w, &real.h_c, noise).map_err(&err)?),
                ],
            )),
            None => None,
        };

        for k in 1..=n {
            let only = ber_only_lower_bound_k(&eigs, k, p_t, noise, q).map_or(blank(), num);
            let design_cols = if k == 1 {
                Some(single.clone())
            } else if k == n {
                Some(full.clone())
            } else {
                None
            };
            let (status, cols) = match design_cols {
                Some(Some((status, cols))) => (status.label(), cols.to_vec()),
                Some(None) => ("infeasible", vec![blank(); 3]),
                None => ("ok", vec![blank(); 3]),
            };
            let mut row = vec![
                setup.spec.seed.to_string(),
                real.index.to_string(),
                num(p_dbm),
                num(gamma_c),
                k.to_string(),
                status.to_string(),
            ];
            row.extend(cols);
            row.push(only);
            out.rows.push(row);
        }
    }
    Ok(out)
}

const CAPACITY_HEADER: &[&str] = &[
    "seed",
    "realization",
    "p_t_dbm",
    "gamma_c",
    "scheme",
    "status",
    "capacity",
];

fn capacity_sweep(setup: &Setup, real: &Realization) -> Result<Partial, RunError> {
    let mut out = Partial::default();
    let eigs: Vec<f64> = real.solver.comm().values().iter().copied().collect();
    let noise = &setup.noise;
    for (p_dbm, gamma_c) in setup.points() {
        let err = setup.lib_err(real, p_dbm, gamma_c);
        let p_t = dbm_to_linear(p_dbm);
        let design = setup.design(real, p_dbm, gamma_c)?;
        out.record(&design);
        let ber_only = ber_only_precoder(real.solver.comm(), p_t)
            .map_err(&err)?
            .precoder()
            .expect("closed form carries V");
        // equal power per symbol within the budget, whatever `baseline_power` says
        let n = setup.frame_size();
        let uniform = CMatrix::identity(n, n) * Complex64::new((p_t / n as f64).sqrt(), 0.0);
        let proposed = match &design.precoder {
            Some(w) => Some(achievable_capacity(w, &real.h_c, noise).map_err(&err)?),
            None => None,
        };
        let entries = [
            ("proposed", design.status, proposed),
            (
                "ber-only",
                Status::Ok,
                Some(achievable_capacity(&ber_only, &real.h_c, noise).map_err(&err)?),
            ),
            (
                "uniform",
                Status::Ok,
                Some(achievable_capacity(&uniform, &real.h_c, noise).map_err(&err)?),
            ),
            (
                "water-filling",
                Status::Ok,
                Some(water_filling_capacity(&eigs, p_t, noise)),
            ),
        ];
        for (scheme, status, value) in entries {
            out.rows.push(vec![
                setup.spec.seed.to_string(),
                real.index.to_string(),
                num(p_dbm),
                num(gamma_c),
                scheme.to_string(),
                status.label().to_string(),
                value.map_or(blank(), num),
            ]);
        }
    }
    Ok(out)
}

type KindFn = fn(&Setup, &Realization) -> Result<Partial, RunError>;

/// Per-kind row builder, CSV header, and the key/value columns averaged
/// into the summary table.
fn kind_table(
    kind: ExperimentKind,
) -> (
    KindFn,
    &'static [&'static str],
    &'static [&'static str],
    &'static [&'static str],
) {
    match kind {
        ExperimentKind::Convergence => (convergence, CONVERGENCE_HEADER, &[], &[]),
        ExperimentKind::BerVsPower => (
            ber_vs_power,
            BER_HEADER,
            &["p_t_dbm", "gamma_c", "scheme"],
            &["analytic_ber", "empirical_ber"],
        ),
        ExperimentKind::DiagElements => (
            diag_elements,
            DIAG_HEADER,
            &["p_t_dbm", "gamma_c", "scheme", "index"],
            &["diag_value"],
        ),
        ExperimentKind::BerVsCrb => (
            ber_vs_crb,
            CRB_HEADER,
            &["gamma_c", "p_t_dbm"],
            &["ber", "ber_lower_bound", "crb"],
        ),
        ExperimentKind::SymbolSweep => (
            symbol_sweep,
            SYMBOL_HEADER,
            &["p_t_dbm", "gamma_c", "k"],
            &["ber_lb", "crb", "capacity", "ber_only_lb"],
        ),
        ExperimentKind::CapacitySweep => (
            capacity_sweep,
            CAPACITY_HEADER,
            &["p_t_dbm", "gamma_c", "scheme"],
            &["capacity"],
        ),
    }
}

/// Runs the experiment described by `spec` and returns its tables. When
/// `progress` is set, one line per finished realization goes to stderr.
pub fn run_experiment(spec: &ExperimentSpec, progress: bool) -> Result<RunOutput, RunError> {
    let setup = Setup::new(spec)?;
    let (build, header, keys, values) = kind_table(spec.kind);
    let total = spec.channel_realizations;
    let done = AtomicUsize::new(0);
    let partials: Vec<Partial> = (0..total)
        .into_par_iter()
        .map(|r| {
            let real = setup.realization(r)?;
            let part = build(&setup, &real)?;
            let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
            if progress {
                eprintln!("[{}] realization {r} done ({finished}/{total})", spec.kind);
            }
            Ok(part)
        })
        .collect::<Result<_, RunError>>()?;

    let mut table = Table::new(spec.kind.name(), header);
    let mut output = RunOutput {
        tables: Vec::new(),
        infeasible_points: 0,
        gate_failures: 0,
        solve_seconds: Vec::new(),
    };
    for part in partials {
        table.rows.extend(part.rows);
        output.infeasible_points += part.infeasible;
        output.gate_failures += part.gate_failures;
        output.solve_seconds.extend(part.solve_seconds);
    }
    let summary = (!keys.is_empty()).then(|| table.summarize(keys, values, spec.seed));
    output.tables.push(table);
    output.tables.extend(summary);
    Ok(output)
}
