use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use wfock::harness::Workbench;
use wfock::toeplitz_spectra::{assemble, spectrum};
use wfock::Weight;
use wfock_bench::{context, family, gaussian, model, power_weight, pullback_half};

fn model_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("model_build");
    for n in [40, 80, 120] {
        group.bench_with_input(BenchmarkId::new("power_2", n), &n, |b, &n| {
            b.iter(|| model(power_weight(2.0), n))
        });
    }
    group.finish();
}

fn kernel_eval(c: &mut Criterion) {
    let m = model(Weight::standard(1.0), 80);
    let (a, z) = (Complex64::new(1.0, -0.5), Complex64::new(-0.3, 1.2));
    c.bench_function("kernel_eval_n80", |b| {
        b.iter(|| m.kernel_eval(black_box(a), black_box(z)))
    });
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_and_spectrum");
    group.sample_size(10);
    let standard = model(Weight::standard(1.0), 80);
    let gauss = context(gaussian(), Weight::standard(1.0));
    group.bench_function("gaussian_radial_n80", |b| {
        b.iter(|| spectrum(&assemble(&standard, &gauss).unwrap()).unwrap())
    });
    let weighted = model(power_weight(2.0), 80);
    let pullback = context(pullback_half(), power_weight(2.0));
    group.bench_function("pullback_half_power_2_n80", |b| {
        b.iter(|| spectrum(&assemble(&weighted, &pullback).unwrap()).unwrap())
    });
    group.finish();
}

fn verification(c: &mut Criterion) {
    let mut group = c.benchmark_group("verification");
    group.sample_size(10);
    let f = family(2.0, vec![40, 80]);
    group.bench_function("workbench_power_2", |b| b.iter(|| Workbench::new(&f).unwrap()));
    let wb = Workbench::new(&f).unwrap();
    group.bench_function("boundedness_power_2", |b| b.iter(|| wb.boundedness()));
    group.bench_function("schatten_p2_power_2", |b| b.iter(|| wb.schatten(2.0).unwrap()));
    group.finish();
}

criterion_group!(benches, model_build, kernel_eval, assembly, verification);
criterion_main!(benches);
