use std::hint::black_box;

use bubble_core::family::{family_report, DEFAULT_CAP_RESOLUTION};
use bubble_core::gn_interpolation::{gn_exponent, standard_gn_fixtures};
use bubble_core::torsion::{cosine_perturbed_circle, fundamental_identity_residual, solve_torsion};
use bubble_core::{FamilyMode, FamilyParams, FamilyRules, TorsionMesh};
use criterion::{criterion_group, criterion_main, Criterion};

fn family(c: &mut Criterion) {
    let mut group = c.benchmark_group("family_report");
    group.sample_size(10);
    for (n, k) in [(5usize, 2u32), (6, 2)] {
        let t = FamilyParams::max_scale(n, k);
        let params = FamilyParams::new(n, k, 1.0, t).unwrap();
        let rules = FamilyRules::new(params.chart_dim(), DEFAULT_CAP_RESOLUTION, false).unwrap();
        group.bench_function(format!("N={n} k={k}"), |b| {
            b.iter(|| family_report(black_box(params), FamilyMode::Regular, 2.0, &rules).unwrap())
        });
    }
    group.finish();
}

fn torsion(c: &mut Criterion) {
    let mut group = c.benchmark_group("torsion");
    group.sample_size(10);
    let domain = cosine_perturbed_circle(0.05, 3).unwrap();
    for m in [16usize, 32, 64] {
        let mesh = TorsionMesh::new(m, 4 * m).unwrap();
        group.bench_function(format!("solve+identity {m}x{}", 4 * m), |b| {
            b.iter(|| {
                fundamental_identity_residual(&solve_torsion(black_box(&domain), mesh).unwrap())
            })
        });
    }
    group.finish();
}

fn gn(c: &mut Criterion) {
    let mut group = c.benchmark_group("gn_dilation");
    group.sample_size(10);
    for fx in standard_gn_fixtures().into_iter().take(3) {
        let theta = gn_exponent(&fx.spec);
        group.bench_function(fx.name, |b| b.iter(|| fx.sweep(black_box(theta)).unwrap()));
    }
    group.finish();
}

criterion_group!(kernels, family, torsion, gn);
criterion_main!(kernels);
