//! Benchmarks for the hot paths: graph construction, objective, gradient,
//! and one descent solve. Run with the default features for the data-parallel
//! build and with `--no-default-features` for the sequential build; comparing
//! the two reports measures the parallel speedup:
//!
//!   cargo bench -p glfs --bench core_ops
//!   cargo bench -p glfs --bench core_ops --no-default-features

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use glfs::data::DataMatrix;
use glfs::graph::{build_knn_heat_graph, laplacian, manifold_kernel, KernelWidth};
use glfs::objective::{gradient_exact, objective_exact};
use glfs::optimizer::{owd_minimize, OptimizerConfig};
use glfs::FeatureWeights;
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::hint::black_box;

fn random_matrix(d: usize, n: usize, seed: u64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DataMatrix::new(DMatrix::from_fn(d, n, |_, _| rng.sample(StandardNormal))).unwrap()
}

fn bench_graph(c: &mut Criterion) {
    let mut group = c.benchmark_group("knn_heat_graph");
    for &n in &[100usize, 300] {
        let x = random_matrix(50, n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| {
            b.iter(|| build_knn_heat_graph(black_box(x), 5, KernelWidth::Auto).unwrap())
        });
    }
    group.finish();
}

fn bench_objective_and_gradient(c: &mut Criterion) {
    let n = 200;
    for &d in &[500usize, 2000] {
        let x = random_matrix(d, n, 2);
        let beta = FeatureWeights::ones(d);
        let graph = build_knn_heat_graph(&x, 5, KernelWidth::Auto).unwrap();
        let kernel = manifold_kernel(&laplacian(&graph), 0.1, 1.0).unwrap();
        c.bench_function(&format!("objective_d{d}"), |b| {
            b.iter(|| objective_exact(black_box(&x), black_box(&beta), &kernel).unwrap())
        });
        c.bench_function(&format!("gradient_d{d}"), |b| {
            b.iter(|| gradient_exact(black_box(&x), black_box(&beta), &kernel).unwrap())
        });
    }
}

fn bench_solve(c: &mut Criterion) {
    let x = random_matrix(300, 100, 3);
    let graph = build_knn_heat_graph(&x, 5, KernelWidth::Auto).unwrap();
    let kernel = manifold_kernel(&laplacian(&graph), 0.1, 1.0).unwrap();
    let beta0 = FeatureWeights::ones(300);
    let cfg = OptimizerConfig { max_iter: 20, ..OptimizerConfig::default() };
    c.bench_function("descent_20_iters", |b| {
        b.iter(|| owd_minimize(black_box(&x), &kernel, 1e-3, &beta0, &cfg).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_graph, bench_objective_and_gradient, bench_solve
}
criterion_main!(benches);
