use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use cdch_bench::{disk, koch, unit_load};
use cdch_core::elliptic::solve_dirichlet;
use cdch_core::homogenize::solve_cell;
use cdch_core::{CoefficientField, PeriodicCoefficient, PeriodicPreset, PreconditionerKind, SolverSettings};

fn bench_dirichlet(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_dirichlet");
    group.sample_size(10);
    let mu = unit_load();

    for res in [64, 128, 256] {
        let grid = disk(res);
        let a = CoefficientField::identity(&grid);
        for precond in [PreconditionerKind::Jacobi, PreconditionerKind::Ssor] {
            let settings = SolverSettings { precond, ..SolverSettings::with_tol(1e-10) };
            let id = BenchmarkId::new(format!("disk/{precond:?}"), res);
            group.bench_with_input(id, &res, |b, _| b.iter(|| black_box(solve_dirichlet(&grid, &a, &mu, &settings).unwrap())));
        }
    }

    let grid = koch(3, 256);
    let a = CoefficientField::identity(&grid);
    let settings = SolverSettings::with_tol(1e-10);
    group.bench_function("koch3/256", |b| b.iter(|| black_box(solve_dirichlet(&grid, &a, &mu, &settings).unwrap())));

    group.finish();
}

fn bench_cell(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_cell");
    group.sample_size(10);
    let settings = SolverSettings::with_tol(1e-10);

    for n in [32, 64, 128] {
        let a = PeriodicCoefficient::from_preset(&PeriodicPreset::checkerboard(1.0, 4.0), n).unwrap();
        group.bench_with_input(BenchmarkId::new("checkerboard", n), &n, |b, _| b.iter(|| black_box(solve_cell(&a, &settings, true).unwrap())));
    }

    group.finish();
}

criterion_group!(benches, bench_dirichlet, bench_cell);
criterion_main!(benches);
