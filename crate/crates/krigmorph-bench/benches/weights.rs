//! Weight-matrix assembly and morph application. Assembly dominates real
//! workflows (one pass per mesh at setup time); the morph itself is a
//! single m x 3 by m x p product and should stay cheap enough to call in
//! an optimization loop.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use krigmorph::kernel::{KernelFamily, KernelSpec};
use krigmorph::param::{
    build_weights, select_nodes, DisplacementVector, Parametrization, StopRule,
};
use krigmorph_bench::{surface_band, volume_cloud};

fn bench_weights(c: &mut Criterion) {
    let kernel = KernelSpec::new(KernelFamily::Matern52, 1.2, None).unwrap();
    let (_, nodes) = select_nodes(&kernel, &surface_band(5_000), StopRule::max_nodes(30)).unwrap();

    let mut group = c.benchmark_group("weights/points");
    for p in [10_000usize, 50_000, 200_000] {
        let points = volume_cloud(p);
        group.throughput(Throughput::Elements(p as u64));
        group.bench_with_input(BenchmarkId::from_parameter(p), &points, |b, pts| {
            b.iter(|| build_weights(&kernel, &nodes, pts, 4096).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("weights/chunk");
    let points = volume_cloud(50_000);
    for chunk in [256usize, 4096, 50_000] {
        group.bench_with_input(BenchmarkId::from_parameter(chunk), &chunk, |b, &chunk| {
            b.iter(|| build_weights(&kernel, &nodes, &points, chunk).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("apply/points");
    let (state, nodes) =
        select_nodes(&kernel, &surface_band(5_000), StopRule::max_nodes(30)).unwrap();
    let rows: Vec<[f64; 3]> = nodes.iter().map(|p| [0.01 * p.x(), 0.0, 0.02]).collect();
    let displacement = DisplacementVector::from_rows(&rows).unwrap();
    let sizes = [10_000usize, 200_000];
    let mut param = Parametrization::from_selection(state).unwrap();
    for p in sizes {
        param
            .add_mesh(&format!("cloud{p}"), &volume_cloud(p), 4096)
            .unwrap();
    }
    for p in sizes {
        group.throughput(Throughput::Elements(p as u64));
        group.bench_with_input(BenchmarkId::from_parameter(p), &param, |b, param| {
            b.iter(|| param.displace(&format!("cloud{p}"), &displacement).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_weights);
criterion_main!(benches);
