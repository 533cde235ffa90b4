use criterion::{black_box, criterion_group, criterion_main, Criterion};
use gevrey_core::gevrey::{fit_gevrey, ladder_with, LadderConfig};
use gevrey_core::quad::{evaluate, QuadratureConfig};
use gevrey_core::{run_suite, KernelSpec, ScalarField, Stencil, SuiteConfig, SuiteName};

fn stencils(c: &mut Criterion) {
    c.bench_function("stencil_build_k12", |b| b.iter(|| Stencil::build(black_box(12)).unwrap()));
}

fn operator(c: &mut Criterion) {
    let cfg = QuadratureConfig::default();
    let u = ScalarField::trig(1.0, 0.0).unwrap();
    let k1 = KernelSpec::fractional(1, 0.75).unwrap();
    c.bench_function("evaluate_trig_1d", |b| {
        b.iter(|| evaluate(&u, &k1, black_box(&[0.3]), &cfg).unwrap())
    });
    let g = ScalarField::gaussian(1.0, 2).unwrap();
    let k2 = KernelSpec::fractional(2, 0.75).unwrap();
    c.bench_function("evaluate_gaussian_2d", |b| {
        b.iter(|| evaluate(&g, &k2, black_box(&[0.3, -0.2]), &cfg).unwrap())
    });
}

fn ladders(c: &mut Criterion) {
    let u = ScalarField::trig(1.0, 0.0).unwrap();
    let cfg = LadderConfig::default();
    c.bench_function("ladder_cos_p14", |b| {
        b.iter(|| ladder_with(&u, None, 2.0, 0.75, 14, &cfg).unwrap())
    });
    let l = ladder_with(&u, None, 2.0, 0.75, 14, &cfg).unwrap();
    c.bench_function("fit_cos_p14", |b| b.iter(|| fit_gevrey(black_box(&l), 4, 14).unwrap()));
}

fn suites(c: &mut Criterion) {
    let cfg = SuiteConfig::default();
    let mut g = c.benchmark_group("suites");
    g.sample_size(10);
    g.bench_function("closure", |b| b.iter(|| run_suite(SuiteName::Closure, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, stencils, operator, ladders, suites);
criterion_main!(benches);
