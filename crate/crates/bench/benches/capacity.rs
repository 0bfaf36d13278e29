use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use cdch_bench::{disk, koch};
use cdch_core::capacity::{cdc_scan, hardy_constant, ScanOptions};

fn bench_cdc(c: &mut Criterion) {
    let mut group = c.benchmark_group("cdc_scan");
    group.sample_size(10);
    let opts = ScanOptions { samples: 8, ..Default::default() };

    for level in [1, 3] {
        let grid = koch(level, 128);
        group.bench_with_input(BenchmarkId::new("koch", level), &level, |b, _| b.iter(|| black_box(cdc_scan(&grid, &opts).unwrap())));
    }

    group.finish();
}

fn bench_hardy(c: &mut Criterion) {
    let mut group = c.benchmark_group("hardy_constant");
    group.sample_size(10);

    for res in [32, 64] {
        let grid = disk(res);
        group.bench_with_input(BenchmarkId::new("disk", res), &res, |b, _| b.iter(|| black_box(hardy_constant(&grid, 1e-6).unwrap())));
    }

    group.finish();
}

criterion_group!(benches, bench_cdc, bench_hardy);
criterion_main!(benches);
