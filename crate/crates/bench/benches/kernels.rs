use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ostrovsky_bench::{gaussian_derivative, standard_grid};
use ostrovsky_core::fractional::{stein_derivative, stein_l2_norm, Gaussian, SteinQuadSpec};
use ostrovsky_core::solver::{free_evolution, psi_apply, PicardConfig};
use ostrovsky_core::{apply_group, SignChoice};

fn group(c: &mut Criterion) {
    let grid = standard_grid();
    let f = gaussian_derivative(&grid, 1.0);
    c.bench_function("apply_group/n512", |bench| {
        bench.iter(|| apply_group(black_box(&f), 1.0, SignChoice::Plus).unwrap())
    });
}

fn stein(c: &mut Criterion) {
    let spec = SteinQuadSpec::default();
    let g = Gaussian::new(1.0, 0.0, 1.0);
    c.bench_function("stein_derivative/gaussian", |bench| {
        bench.iter(|| stein_derivative(black_box(&g), 0.3, 0.5, &spec).unwrap())
    });
    let grid = standard_grid();
    let f = gaussian_derivative(&grid, 1.0);
    let mut slow = c.benchmark_group("stein_l2_norm");
    slow.sample_size(10);
    slow.bench_function("n512", |bench| bench.iter(|| stein_l2_norm(black_box(&f), 0.5, &spec).unwrap()));
    slow.finish();
}

fn psi(c: &mut Criterion) {
    let grid = standard_grid();
    let u0 = gaussian_derivative(&grid, 0.1);
    let cfg = PicardConfig::new(0.1, 0.01, SignChoice::Minus, 0.8);
    let traj = free_evolution(&u0, &cfg).unwrap();
    c.bench_function("psi_apply/n512_10steps", |bench| {
        bench.iter(|| psi_apply(black_box(&traj), &u0, &cfg).unwrap())
    });
}

criterion_group!(benches, group, stein, psi);
criterion_main!(benches);
