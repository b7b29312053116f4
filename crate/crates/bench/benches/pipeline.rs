use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use topsimp_bench::scattered_diagram;
use topsimp_core::assignment::{exact_assignment, wasserstein};
use topsimp_core::gradient::build_gradient;
use topsimp_core::persistence::{compute_diagram, diagram_from_gradient};
use topsimp_core::solver::{run, Method};
use topsimp_core::{synth, SolverConfig, TargetSpec, VertexOrder};

fn gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("gradient");
    group.sample_size(10);
    for (name, f) in [
        ("terrain 64x64", synth::terrain(1, 0.005)),
        ("volume 24^3", synth::noisy_volume(24, 7, 0.01)),
    ] {
        let order = VertexOrder::new(&f).unwrap();
        group.bench_function(format!("build {name}"), |b| b.iter(|| build_gradient(black_box(&f), &order)));

        let (_, g, order) = compute_diagram(&f).unwrap();
        let mut moved = f.clone();
        let v = f.len() / 2;
        moved.set(v, f.value(v) + 0.05).unwrap();
        let mut moved_order = order.clone();
        moved_order.update(moved.values(), &[v as u32]);
        group.bench_function(format!("update one vertex {name}"), |b| {
            b.iter_batched(
                || g.clone(),
                |mut g| g.update(&moved, &moved_order, &[v as u32]),
                BatchSize::LargeInput,
            )
        });
        group.bench_function(format!("pairing {name}"), |b| {
            b.iter(|| diagram_from_gradient(black_box(&f), &order, &g))
        });
    }
    group.finish();
}

fn assignment(c: &mut Criterion) {
    let mut group = c.benchmark_group("assignment");
    for n in [64, 256] {
        let (d1, d2) = (scattered_diagram(1, n), scattered_diagram(2, n / 2));
        group.bench_function(format!("auction {n}"), |b| b.iter(|| wasserstein(&d1, &d2, 2.0).unwrap()));
        group.bench_function(format!("exact {n}"), |b| b.iter(|| exact_assignment(&d1, &d2, 2.0).unwrap()));
    }
    group.finish();
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    let f = synth::terrain(1, 0.005);
    for method in [Method::Baseline, Method::Accelerated] {
        let config = SolverConfig {
            method,
            ..Default::default()
        };
        group.bench_function(format!("terrain {method:?}"), |b| {
            b.iter(|| run(&f, &TargetSpec::Threshold(0.01), &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, gradient, assignment, solver);
criterion_main!(benches);
