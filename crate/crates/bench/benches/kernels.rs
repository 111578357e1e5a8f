use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lsemix::cones::{is_completely_positive, is_copositive, DEFAULT_TOL};
use lsemix::rng::stream;
use lsemix_bench::{cone_fixtures, ghss_pair_member};
use nalgebra::DVector;
use std::hint::black_box;

fn bench_pdf(c: &mut Criterion) {
    let d = ghss_pair_member(0.0);
    let y = DVector::from_vec(vec![0.4, -0.2]);
    c.bench_function("pdf/ghss2", |b| b.iter(|| d.pdf(black_box(&y)).unwrap()));
}

fn bench_sampling(c: &mut Criterion) {
    let d = ghss_pair_member(0.0);
    c.bench_function("sample/ghss2_x1000", |b| {
        let mut rng = stream(1, 0);
        b.iter(|| d.sample(&mut rng, 1000).unwrap())
    });
}

fn bench_cones(c: &mut Criterion) {
    let mut group = c.benchmark_group("cones");
    group.sample_size(10);
    for (name, m) in cone_fixtures() {
        group.bench_with_input(BenchmarkId::new("copositive", name), &m, |b, m| {
            b.iter(|| is_copositive(m, DEFAULT_TOL).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("completely_positive", name), &m, |b, m| {
            b.iter(|| is_completely_positive(m, DEFAULT_TOL).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_pdf, bench_sampling, bench_cones);
criterion_main!(benches);
