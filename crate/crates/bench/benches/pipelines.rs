use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use envlab_bench::{bipartite_state, experiment, gaussian_on_mesh, weighted_state};
use envlab_core::hilbert::{schmidt, DEFAULT_ZERO_TOL};
use envlab_core::{born, continuum, frequencies};
use std::hint::black_box;

fn schmidt_sizes(c: &mut Criterion) {
    let mut group = c.benchmark_group("schmidt");
    for (left, right) in [(4, 4), (16, 32), (64, 64)] {
        let (state, cut) = bipartite_state(left, right);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{left}x{right}")),
            &state,
            |b, s| b.iter(|| schmidt(black_box(s), &cut, DEFAULT_ZERO_TOL).unwrap()),
        );
    }
    group.finish();
}

fn born_pipeline(c: &mut Criterion) {
    let (state, total) = weighted_state(&[1, 2, 3, 4]);
    c.bench_function("born/pipeline", |b| {
        b.iter(|| {
            born::born_probabilities(
                black_box(&state),
                &envlab_core::Bipartition::prefix(1, 2).unwrap(),
                total,
            )
            .unwrap()
        })
    });
    let amps = state.amps().to_vec();
    c.bench_function("born/rationalize_1000", |b| {
        b.iter(|| born::rationalize(black_box(&amps), 1000).unwrap())
    });
}

fn histories(c: &mut Criterion) {
    let spec = experiment(1, 3, 256);
    c.bench_function("frequencies/history_counts_256", |b| {
        b.iter(|| frequencies::history_counts(black_box(&spec)))
    });
    c.bench_function("frequencies/maverick_mass_256", |b| {
        b.iter(|| frequencies::maverick_mass(black_box(&spec), 0.1).unwrap())
    });
    let small = experiment(1, 3, 4);
    c.bench_function("frequencies/superensemble_3_4", |b| {
        b.iter(|| {
            frequencies::build_superensemble_explicit(black_box(&small), 4, 1, false).unwrap()
        })
    });
}

fn discretization(c: &mut Criterion) {
    let mut group = c.benchmark_group("continuum");
    for dx in [0.5, 0.1, 0.02] {
        let (psi, mesh) = gaussian_on_mesh(dx);
        group.bench_with_input(BenchmarkId::new("discretize", dx), &mesh, |b, m| {
            b.iter(|| continuum::discretize(&psi, black_box(m), 16).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    schmidt_sizes,
    born_pipeline,
    histories,
    discretization
);
criterion_main!(benches);
