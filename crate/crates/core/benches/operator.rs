//! Kernel and solver timings. Run once with default features and once with
//! `--no-default-features` to compare the rayon and sequential back ends;
//! the group names carry the back end so the results sit side by side.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wellspec::eigensolver::{smallest_eigenpairs, SolverConfig};
use wellspec::grid_op::{build_operator, BoxGrid};
use wellspec::par;
use wellspec::wells::PotentialWell;

const BACKEND: &str = if cfg!(feature = "parallel") {
    "rayon"
} else {
    "sequential"
};

fn random_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn apply(c: &mut Criterion) {
    par::init_threads_from_env();
    let well = PotentialWell::circle(1.0).unwrap();
    let mut group = c.benchmark_group(format!("apply/{BACKEND}"));
    for cells in [32, 64, 96] {
        let grid = BoxGrid::new(3, 8.0, cells).unwrap();
        let op = build_operator(&well, &grid).unwrap();
        let u = random_vec(grid.len(), 1);
        let mut out = vec![0.0; grid.len()];
        group.bench_with_input(BenchmarkId::from_parameter(cells), &cells, |b, _| {
            b.iter(|| op.apply(black_box(&u), &mut out))
        });
    }
    group.finish();
}

fn block_dot(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("block_dot/{BACKEND}"));
    let len = 64 * 64 * 64;
    for width in [4, 12] {
        let basis: Vec<Vec<f64>> = (0..width).map(|i| random_vec(len, i as u64)).collect();
        let ws: Vec<Vec<f64>> = (0..4).map(|i| random_vec(len, 100 + i)).collect();
        group.bench_with_input(BenchmarkId::from_parameter(width), &width, |b, _| {
            b.iter(|| par::block_dot(black_box(&basis), black_box(&ws)))
        });
    }
    group.finish();
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("solve/{BACKEND}"));
    group.sample_size(10);
    let well = PotentialWell::circle(1.0).unwrap();
    let grid = BoxGrid::new(3, 8.0, 32).unwrap();
    let op = build_operator(&well, &grid).unwrap();
    for k in [1, 4] {
        let cfg = SolverConfig::new(k);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| smallest_eigenpairs(&op, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, apply, block_dot, solver);
criterion_main!(benches);
