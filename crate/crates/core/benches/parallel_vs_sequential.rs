//! Compares verification throughput with trials on the rayon pool against the
//! sequential fallback. Run with `cargo bench`, or with
//! `--no-default-features` to measure the build without rayon at all.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geninv::catalog;
use geninv::verifier::{
    check_linear_relation, input_rng, random_image, random_poly_field,
    verify_derivative_invariance, verify_moment_invariance, TransformGroup, VerifyConfig,
};

fn cfg(trials: u32, parallel: bool) -> VerifyConfig {
    VerifyConfig { trials, seed: 7, tolerance: 1e-9, points: 3, parallel }
}

fn bench_moment_verification(c: &mut Criterion) {
    let expr = catalog::affine_2d_invariants().remove(1);
    let mut rng = input_rng(7);
    let images: Vec<_> = (0..4).map(|_| random_image(2, 50, &mut rng)).collect();
    let mut group = c.benchmark_group("moment_verify_aff2");
    for parallel in [false, true] {
        let label = if parallel { "parallel" } else { "sequential" };
        group.bench_with_input(BenchmarkId::from_parameter(label), &parallel, |b, &p| {
            b.iter(|| {
                verify_moment_invariance(&expr, &images, TransformGroup::Affine, &cfg(60, p))
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_derivative_verification(c: &mut Criterion) {
    let expr = geninv::verifier::conjecture_derivative_expr(2).unwrap();
    let mut rng = input_rng(7);
    let fields: Vec<_> = (0..3).map(|_| random_poly_field(2, 3, &mut rng)).collect();
    let mut group = c.benchmark_group("derivative_verify_order2");
    for parallel in [false, true] {
        let label = if parallel { "parallel" } else { "sequential" };
        group.bench_with_input(BenchmarkId::from_parameter(label), &parallel, |b, &p| {
            b.iter(|| {
                verify_derivative_invariance(&expr, &fields, TransformGroup::Affine, &cfg(20, p))
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_linear_relation(c: &mut Criterion) {
    let mut group = c.benchmark_group("linear_relation_order3");
    for parallel in [false, true] {
        let label = if parallel { "parallel" } else { "sequential" };
        group.bench_with_input(BenchmarkId::from_parameter(label), &parallel, |b, &p| {
            b.iter(|| check_linear_relation(3, 2, &cfg(10, p)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_moment_verification,
    bench_derivative_verification,
    bench_linear_relation
);
criterion_main!(benches);
