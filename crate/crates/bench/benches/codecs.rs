use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use rlemask_bench::blocky_mask;
use rlemask_core::mask::flatten_2d;
use rlemask_core::rle::extract_runs;
use rlemask_core::{decode_static, encode_static, DecodeMode, FlattenOrder, Scheme, SchemeConfig};

fn bench_encode(c: &mut Criterion) {
    let mut group = c.benchmark_group("encode");
    for side in [64usize, 160, 512] {
        let mask = blocky_mask(side, 5, side / 4, 11);
        for scheme in [Scheme::NaiveMc, Scheme::Lac, Scheme::Bac, Scheme::DiffMc] {
            let cfg = SchemeConfig::square(scheme, side, 5);
            group.bench_with_input(BenchmarkId::new(scheme.name(), side), &mask, |b, m| {
                b.iter(|| encode_static(black_box(m), &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_decode(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode");
    for side in [64usize, 160, 512] {
        let mask = blocky_mask(side, 5, side / 4, 11);
        for scheme in [Scheme::NaiveMc, Scheme::Lac, Scheme::Bac, Scheme::DiffMc] {
            let seq = encode_static(&mask, &SchemeConfig::square(scheme, side, 5)).unwrap();
            group.bench_with_input(BenchmarkId::new(scheme.name(), side), &seq, |b, s| {
                b.iter(|| decode_static(black_box(s), DecodeMode::Strict).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_runs(c: &mut Criterion) {
    let mask = blocky_mask(1024, 5, 256, 3);
    let vector = flatten_2d(&mask, FlattenOrder::RowMajor).unwrap();
    c.bench_function("extract_runs/1024", |b| {
        b.iter(|| extract_runs(black_box(&vector)))
    });
}

criterion_group!(benches, bench_encode, bench_decode, bench_runs);
criterion_main!(benches);
