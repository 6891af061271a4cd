use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use tukeylab::bodies::{cramer_transform, zp_plus_body};
use tukeylab::depth::{depth_analytic, depth_empirical_2d, tukey_region, RegionOptions};
use tukeylab::experiments::hull_contains;
use tukeylab::polytopes::RandomPolytope;
use tukeylab::{DepthSource, DirectionBudget, DirectionGrid, MeasureSpec};
use tukeylab_bench::{gaussian_cloud, probe};

fn empirical_depth(c: &mut Criterion) {
    let mut group = c.benchmark_group("depth_empirical_2d");
    for n in [100, 1_000, 10_000] {
        let cloud = gaussian_cloud(2, n, 1);
        let x = probe(2, 0.5);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cloud, |b, cloud| {
            b.iter(|| depth_empirical_2d(cloud, black_box(&x)).unwrap())
        });
    }
    group.finish();
}

fn analytic_depth(c: &mut Criterion) {
    let mut group = c.benchmark_group("depth_analytic");
    let budget = DirectionBudget::default();
    for (name, spec) in [("cube2", MeasureSpec::cube(2)), ("cube3", MeasureSpec::cube(3)), ("cauchy2", MeasureSpec::cauchy(2))] {
        let x = probe(spec.dim(), 0.3);
        group.bench_function(name, |b| b.iter(|| depth_analytic(&spec, black_box(&x), &budget).unwrap()));
    }
    group.finish();
}

fn membership(c: &mut Criterion) {
    let mut group = c.benchmark_group("polytope_membership");
    for dim in [3, 5] {
        let spec = MeasureSpec::gaussian(dim);
        let poly = RandomPolytope::sample(&spec, 200, false, 7).unwrap();
        let x = probe(dim, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &poly, |b, poly| b.iter(|| poly.membership(black_box(&x)).unwrap()));
    }
    let planar = gaussian_cloud(2, 1_000, 3);
    let x = probe(2, 1.5);
    group.bench_function("hull_contains_2d", |b| b.iter(|| hull_contains(&planar, black_box(&x)).unwrap()));
    group.finish();
}

fn bodies(c: &mut Criterion) {
    let mut group = c.benchmark_group("bodies");
    group.sample_size(10);
    let cube = MeasureSpec::cube(2);
    let grid = DirectionGrid::new(2, 64, 0);
    let source = DepthSource::Spec(&cube);
    group.bench_function("tukey_region_cube2_m64", |b| {
        b.iter(|| tukey_region(&source, black_box(1.5), &grid, &RegionOptions::default()).unwrap())
    });
    group.bench_function("zp_plus_body_cube2_m64", |b| b.iter(|| zp_plus_body(&source, black_box(2.0), &grid).unwrap()));
    group.bench_function("cramer_cube2", |b| b.iter(|| cramer_transform(&cube, black_box(&[0.5, 0.2])).unwrap()));
    group.finish();
}

criterion_group!(benches, empirical_depth, analytic_depth, membership, bodies);
criterion_main!(benches);
