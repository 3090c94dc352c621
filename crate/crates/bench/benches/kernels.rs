use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use wedgegreen_bench::{jumping_path, small_mesh};
use wedgegreen_core::bounds::appendix::{lozenka_oracle, zhut_oracle, ConvolutionInput, HalfLineInput, Profile};
use wedgegreen_core::solver::{green, BoundaryCondition, ProblemSpec};
use wedgegreen_core::{gamma, gamma_deriv, WedgeDomain};

fn whole_space(c: &mut Criterion) {
    let path = jumping_path();
    let (x, y) = ([0.3, -0.2], [0.1, 0.4]);
    c.bench_function("gamma", |b| b.iter(|| gamma(&path, black_box(&x), &y, 0.35, 0.05).unwrap()));
    c.bench_function("gamma_deriv order 2 + ds", |b| {
        b.iter(|| gamma_deriv(&path, &[1, 0], &[0, 1], true, black_box(&x), &y, 0.35, 0.05).unwrap())
    });
}

fn oracles(c: &mut Criterion) {
    let half = HalfLineInput {
        a: 0.7,
        b: 1.2,
        c: 0.4,
        varrho1: 0.3,
        varrho2: 2.0,
        x1: 0.5,
        y1: 1.5,
        profile: Profile::Linear { slope: 0.5 },
        eps: 0.05,
    };
    c.bench_function("half-line oracle", |b| b.iter(|| zhut_oracle(black_box(&half)).unwrap()));
    let conv = ConvolutionInput { d: 3, a: -2.0, b: -0.5, varrho1: 0.2, varrho2: 3.0, x: vec![0.1, 0.3, 0.0], y: vec![1.0, -0.4, 0.2] };
    c.bench_function("convolution oracle", |b| b.iter(|| lozenka_oracle(black_box(&conv)).unwrap()));
}

fn solver(c: &mut Criterion) {
    let path = jumping_path();
    let mesh = small_mesh(&path);
    let spec = ProblemSpec::new(BoundaryCondition::Oblique, WedgeDomain::sector(std::f64::consts::FRAC_PI_2).unwrap(), path).unwrap();
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    group.bench_function("oblique green, quarter plane", |b| b.iter(|| green(&spec, [0.42, 0.42], 0.0, Some(0.1), &mesh).unwrap()));
    group.finish();
}

criterion_group!(benches, whole_space, oracles, solver);
criterion_main!(benches);
