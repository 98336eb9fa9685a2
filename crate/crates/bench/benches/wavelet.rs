use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use weits_bench::series;
use weits_core::wavelet::{haar_project, mdwd, WaveletKind};

fn decompose(c: &mut Criterion) {
    let mut g = c.benchmark_group("mdwd");
    for n in [96usize, 720, 4096] {
        let x = series(n);
        for kind in [WaveletKind::Haar, WaveletKind::Db2, WaveletKind::Sym4] {
            g.bench_with_input(BenchmarkId::new(kind.name(), n), &x, |b, x| {
                b.iter(|| mdwd(black_box(x), 3, kind).unwrap())
            });
        }
    }
    g.finish();
}

fn project(c: &mut Criterion) {
    let x = series(4096);
    c.bench_function("haar_project w=8", |b| b.iter(|| haar_project(black_box(&x), 8).unwrap()));
}

criterion_group!(benches, decompose, project);
criterion_main!(benches);
