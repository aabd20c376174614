use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use grip_core::contact::{check_slip, friction_wrench_at_cor, limit_curve, PressureField};
use grip_core::nalgebra::Vector2;

fn wrench(c: &mut Criterion) {
    let field = PressureField::with_cop(2.0, Vector2::new(0.005, 0.0), 0.03).unwrap();
    let mut g = c.benchmark_group("friction_wrench_at_cor");
    for (name, cor) in [
        ("inside", Vector2::new(0.01, 0.0)),
        ("outside", Vector2::new(0.2, 0.0)),
    ] {
        g.bench_function(name, |b| {
            b.iter(|| friction_wrench_at_cor(black_box(&field), 0.5, black_box(&cor)))
        });
    }
    g.finish();
}

fn curve(c: &mut Criterion) {
    let field = PressureField::with_cop(2.0, Vector2::new(0.005, 0.0), 0.03).unwrap();
    let mut g = c.benchmark_group("limit_curve");
    for n in [64usize, 256] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| limit_curve(black_box(&field), 0.5, n))
        });
    }
    g.finish();
    let lc = limit_curve(&field, 0.5, 64).unwrap();
    c.bench_function("check_slip", |b| {
        b.iter(|| check_slip(black_box(Vector2::new(0.4, 0.01)), &lc))
    });
}

criterion_group!(benches, wrench, curve);
criterion_main!(benches);
