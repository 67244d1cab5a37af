use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use otfs_isac::{dd_channel, eigen_basis, simulate_ber, DualSolver, SimConfig};
use otfs_isac_bench::Fixture;
use std::hint::black_box;

const GRIDS: [(usize, usize); 3] = [(4, 4), (8, 8), (16, 8)];

fn channel(c: &mut Criterion) {
    let mut group = c.benchmark_group("dd_channel");
    for (m, n) in GRIDS {
        let f = Fixture::new(m, n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(m * n), &f, |b, f| {
            b.iter(|| dd_channel(black_box(&f.scenario.comm), &f.scenario.grid).unwrap())
        });
    }
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen_basis");
    for (m, n) in GRIDS {
        let gram = Fixture::new(m, n, 1).h_c.gram();
        group.bench_with_input(BenchmarkId::from_parameter(m * n), &gram, |b, g| {
            b.iter(|| eigen_basis(black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("dual_solve");
    group.sample_size(20);
    for (m, n) in GRIDS {
        let f = Fixture::new(m, n, 1);
        group.bench_with_input(BenchmarkId::new("solve", m * n), &f, |b, f| {
            b.iter(|| {
                f.solver
                    .solve(black_box(&f.config), &f.qam, &f.noise)
                    .unwrap()
            })
        });
        group.bench_with_input(BenchmarkId::new("setup", m * n), &f, |b, f| {
            b.iter(|| DualSolver::new(black_box(&f.h_c), &f.h_dot).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_ber");
    group.sample_size(10);
    let f = Fixture::new(8, 8, 1);
    let w = f.precoder();
    let sim = SimConfig::new(200, 7, f.qam.clone(), f.noise);
    group.bench_function("8x8_200_blocks", |b| {
        b.iter(|| simulate_ber(&f.h_c, black_box(&w), &sim).unwrap())
    });
    group.finish();
}

criterion_group!(benches, channel, eigen, solve, monte_carlo);
criterion_main!(benches);
