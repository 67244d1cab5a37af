mod common;

use common::*;
use nalgebra::DVector;
use num_complex::Complex64;
use otfs_isac::linalg::{hpd_inverse, scale_columns, CMatrix};
use otfs_isac::solver::{
    ber_only_precoder, construct_v, construct_v_with, crb_only_precoder, los_gamma_star,
    optimal_covariance, single_symbol_precoder, DftOrientation,
};
use otfs_isac::{eigen_basis, DualSolver, SolverConfig};
use rand::Rng;

fn comm_objective(w: &CMatrix, gram: &CMatrix) -> f64 {
    hpd_inverse(&(w.adjoint() * gram * w), "W^H G W")
        .unwrap()
        .trace()
        .re
}

#[test]
fn ber_only_beats_random_power_allocations() {
    let mut rng = rng(31);
    for _ in 0..5 {
        let gram = random_psd(&mut rng, 4, 0.05);
        let basis = eigen_basis(&gram).unwrap();
        let p_t = rng.random_range(0.5..20.0);
        let best = ber_only_precoder(&basis, p_t).unwrap();
        let w_best = best.precoder().unwrap();
        assert!((comm_objective(&w_best, &gram) - best.objective).abs() < 1e-10 * best.objective);
        for _ in 0..200 {
            let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let sigma = DVector::from_iterator(4, raw.iter().map(|r| (r * p_t / total).sqrt()));
            let w =
                scale_columns(&random_unitary(&mut rng, 4), &sigma) * random_unitary(&mut rng, 4);
            assert!(comm_objective(&w, &gram) >= best.objective * (1.0 - 1e-12));
        }
    }
}

#[test]
fn gamma_range_brackets_random_designs() {
    let mut rng = rng(32);
    let inst = instance(2, 2, 32);
    let solver = DualSolver::new(&inst.h_c, &inst.h_dot).unwrap();
    let p_t = 10.0;
    let range = solver.gamma_range(p_t);
    assert!(range.min <= range.max);
    let sensing = solver.sensing().gram();
    for _ in 0..500 {
        let w = random_matrix(&mut rng, 4, 4);
        let w = &w * Complex64::new((p_t / w.norm_squared()).sqrt(), 0.0);
        assert!((w.adjoint() * &sensing * &w).trace().re <= range.max * (1.0 + 1e-12));
    }
    let crb = crb_only_precoder(solver.sensing(), p_t)
        .unwrap()
        .precoder()
        .unwrap();
    let achieved = (crb.adjoint() * &sensing * &crb).trace().re;
    assert!((achieved - range.max).abs() < 1e-10 * range.max);
}

#[test]
fn los_loading_matches_general_covariance() {
    let mut rng = rng(33);
    let sensing = eigen_basis(&random_psd(&mut rng, 4, 0.1)).unwrap();
    let gain = 1.7f64;
    let comm = eigen_basis(&(CMatrix::identity(4, 4) * Complex64::new(gain * gain, 0.0))).unwrap();
    let xi1 = sensing.leading_value();
    let (lambda, mu) = (0.3, 0.3 * xi1 + 0.5);
    let loading = los_gamma_star(lambda, mu, &sensing, gain).unwrap();
    let p = optimal_covariance(lambda, mu, &comm, &sensing).unwrap();
    let projected = sensing.vectors().adjoint() * &p * sensing.vectors();
    for i in 0..4 {
        assert!((projected[(i, i)].re - loading[i]).abs() < 1e-10 * loading[i]);
    }

    // stationarity of the per-direction Lagrangian 1/(g² p) + (μ - λ ξ) p
    for (i, &xi) in sensing.values().iter().enumerate() {
        let lag = |p: f64| 1.0 / (gain * gain * p) + (mu - lambda * xi) * p;
        let h = 1e-6 * loading[i];
        let slope = (lag(loading[i] + h) - lag(loading[i] - h)) / (2.0 * h);
        assert!(slope.abs() < 1e-6);
    }
}

#[test]
fn solved_covariance_satisfies_kkt_conditions() {
    let p_t = 1000.0;
    for seed in 0..5 {
        let inst = instance(2, 2, 340 + seed);
        let solver = DualSolver::new(&inst.h_c, &inst.h_dot).unwrap();
        let range = solver.gamma_range(p_t);
        let gamma = range.min + 0.7 * (range.max - range.min);
        let cfg = SolverConfig::new(p_t, gamma).with_tolerance(1e-9);
        let sol = solver
            .solve(&cfg, &inst.constellation, &inst.noise)
            .unwrap();
        let duals = sol.duals.unwrap();
        assert!(duals.lambda > 0.0, "constraint should be active");
        let kkt =
            optimal_covariance(duals.lambda, duals.mu, solver.comm(), solver.sensing()).unwrap();
        let kkt = &kkt * Complex64::new(p_t / kkt.trace().re, 0.0);
        assert!(rel_err(&sol.covariance, &kkt) < 1e-4);
        let sensing = (solver.sensing().gram() * &sol.covariance).trace().re;
        assert!((sensing - gamma).abs() < 1e-3 * gamma);
        assert!((sol.covariance.trace().re - p_t).abs() < 1e-9 * p_t);
    }
}

#[test]
fn objective_grows_with_sensing_threshold() {
    let p_t = 1000.0;
    let inst = instance(2, 2, 35);
    let solver = DualSolver::new(&inst.h_c, &inst.h_dot).unwrap();
    let range = solver.gamma_range(p_t);
    let mut last = 0.0;
    for frac in [0.0, 0.2, 0.4, 0.6, 0.8, 0.95] {
        let gamma = range.min + frac * (range.max - range.min);
        let cfg = SolverConfig::new(p_t, gamma).with_tolerance(1e-9);
        let objective = solver
            .solve(&cfg, &inst.constellation, &inst.noise)
            .unwrap()
            .objective;
        assert!(
            objective >= last * (1.0 - 1e-6),
            "{objective} < {last} at {frac}"
        );
        last = objective;
    }
}

#[test]
fn single_symbol_beamformer_matches_grid_search() {
    let mut rng = rng(36);
    for _ in 0..10 {
        let comm = eigen_basis(&random_psd(&mut rng, 4, 0.1)).unwrap();
        let sensing = eigen_basis(&random_psd(&mut rng, 4, 0.1)).unwrap();
        let p_t = 2.0;
        let xi1 = sensing.leading_value();
        let gamma = rng.random_range(0.1..0.99) * p_t * xi1;
        let w = single_symbol_precoder(&comm, &sensing, gamma, p_t).unwrap();
        let wc = comm.leading_vector();
        let ws = sensing.leading_vector();
        let gain = |v: &otfs_isac::CVector| wc.dotc(v).norm_sqr();
        assert!((w.norm_squared() - p_t).abs() < 1e-12 * p_t);
        assert!(ws.dotc(&w).norm_sqr() * xi1 >= gamma * (1.0 - 1e-12));

        // search over w = x w_s + y w_u with |x|² + |y|² = P_T, |x|² Ξ₁ ≥ γ
        let orth = &wc - &ws * ws.dotc(&wc);
        let wu = &orth / Complex64::new(orth.norm(), 0.0);
        let mut best = 0.0f64;
        for a in 0..=400 {
            let share = a as f64 / 400.0;
            if share * p_t * xi1 < gamma {
                continue;
            }
            for b in 0..64 {
                let phase = Complex64::from_polar(1.0, std::f64::consts::TAU * b as f64 / 64.0);
                let v = &ws * Complex64::new((share * p_t).sqrt(), 0.0)
                    + &wu * (phase * ((1.0 - share) * p_t).sqrt());
                best = best.max(gain(&v));
            }
        }
        assert!(gain(&w) >= best * (1.0 - 1e-9));
    }
}

#[test]
fn construct_v_equalizes_random_designs() {
    let mut rng = rng(37);
    for n in [2, 3, 4, 8] {
        let sigma = DVector::from_fn(n, |_, _| rng.random_range(0.2..3.0));
        let z = random_psd(&mut rng, n, 0.2);
        for orientation in [DftOrientation::Forward, DftOrientation::Inverse] {
            let v = construct_v_with(&sigma, &z, orientation).unwrap();
            assert!(rel_err(&(v.adjoint() * &v), &CMatrix::identity(n, n)) < 1e-12);
            let s = CMatrix::from_diagonal(&sigma.map(|x| Complex64::new(x, 0.0)));
            let g = v.adjoint() * &s * &z * &s * &v;
            let diag = hpd_inverse(&g, "G").unwrap().diagonal();
            let mean = diag.iter().map(|d| d.re).sum::<f64>() / n as f64;
            assert!(diag.iter().all(|d| (d.re - mean).abs() < 1e-10 * mean));
        }
        assert_eq!(
            construct_v(&sigma, &z).unwrap(),
            construct_v_with(&sigma, &z, DftOrientation::Forward).unwrap()
        );
    }
}

#[test]
fn tight_sensing_limit_on_full_grid_converges() {
    // the dual optimum sits ~1e-7 from the edge mu = lambda xi_1 at mu ~ 1e7
    use otfs_isac::metrics::{compute_crb, dbm_to_linear};
    use otfs_isac::scenario::stream_rng;
    use otfs_isac::{
        ChannelStatistics, DopplerUnit, NoiseModel, OtfsGrid, QamConstellation, Scenario,
    };

    let grid = OtfsGrid::new(8, 8, 2e3).unwrap();
    let stats = ChannelStatistics::new(3, 4, 2.0).unwrap();
    let scenario = Scenario::draw(grid, &stats, 1.0, &mut stream_rng(4, 0)).unwrap();
    let h_c = scenario.comm_channel().unwrap();
    let h_dot = scenario.derivative_channel(DopplerUnit::Tap).unwrap();
    let noise = NoiseModel::from_dbm(0.0, 0.0).unwrap();
    let qam = QamConstellation::new(4).unwrap();
    let solver = DualSolver::new(&h_c, &h_dot).unwrap();
    let p_t = dbm_to_linear(30.0);
    let gamma_c = 3e-5;
    let gamma = noise.sigma_s_sq() / gamma_c;
    assert!(solver.gamma_range(p_t).contains(gamma));

    for xi_0 in [1e-3, 1e-8] {
        let cfg = SolverConfig::new(p_t, gamma).with_tolerance(xi_0);
        let sol = solver.solve(&cfg, &qam, &noise).unwrap();
        let w = solver.balanced_precoder(&sol).unwrap();
        assert!((w.norm_squared() - p_t).abs() < 1e-9 * p_t);
        assert!(compute_crb(&w, &h_dot, &noise).unwrap() <= gamma_c * (1.0 + 1e-3));
        if xi_0 < 1e-6 {
            let raw = sol.diagnostics.unwrap().raw_power;
            assert!((raw - p_t).abs() < 1e-3 * p_t, "{raw}");
        }
    }
}

#[test]
fn returned_design_meets_sensing_threshold_at_default_tolerance() {
    use otfs_isac::metrics::{compute_crb, dbm_to_linear};
    use otfs_isac::scenario::stream_rng;
    use otfs_isac::{
        ChannelStatistics, DopplerUnit, NoiseModel, OtfsGrid, QamConstellation, Scenario,
    };

    let grid = OtfsGrid::new(8, 8, 2e3).unwrap();
    let stats = ChannelStatistics::new(3, 4, 2.0).unwrap();
    let noise = NoiseModel::from_dbm(0.0, 0.0).unwrap();
    let qam = QamConstellation::new(4).unwrap();
    let p_t = dbm_to_linear(35.0);
    for r in 0..6 {
        let scenario = Scenario::draw(grid, &stats, 1.0, &mut stream_rng(77, r)).unwrap();
        let h_c = scenario.comm_channel().unwrap();
        let h_dot = scenario.derivative_channel(DopplerUnit::Tap).unwrap();
        let solver = DualSolver::new(&h_c, &h_dot).unwrap();
        let range = solver.gamma_range(p_t);
        for frac in [0.5, 0.9, 0.99, 0.999] {
            let gamma = range.min + frac * (range.max - range.min);
            let sol = solver
                .solve(&SolverConfig::new(p_t, gamma), &qam, &noise)
                .unwrap();
            let w = solver.balanced_precoder(&sol).unwrap();
            let crb = compute_crb(&w, &h_dot, &noise).unwrap();
            assert!(
                crb * gamma <= noise.sigma_s_sq() * (1.0 + 1e-9),
                "r={r} frac={frac}"
            );
            assert!((w.norm_squared() - p_t).abs() < 1e-9 * p_t);
        }
    }
}
