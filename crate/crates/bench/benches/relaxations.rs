use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lsipp_bench::{cusp_problem, interval_problem, tangent_line_problem};
use lsipp_core::certify::extract_atoms;
use lsipp_core::gen::{generate, GenSpec};
use lsipp_core::moment::zeta_in_basis;
use lsipp_core::relax::{build_moment, build_moment_h, homogenize_problem, solve_relaxation};
use lsipp_core::sdp::{solve, SolverOptions};
use lsipp_core::{CertifyOptions, HierarchyOptions, MomentVector, Polynomial};

fn polynomials(c: &mut Criterion) {
    let p = Polynomial::parse("(1 + Y1 + Y2 + Y3)^4", 3).unwrap();
    c.bench_function("poly_mul_deg8_3vars", |b| b.iter(|| black_box(&p).mul(black_box(&p)).unwrap()));
}

fn build(c: &mut Criterion) {
    let prob = tangent_line_problem();
    c.bench_function("build_moment_tangent_k3", |b| b.iter(|| build_moment(black_box(&prob), 3).unwrap()));
    let h = homogenize_problem(&cusp_problem()).unwrap();
    c.bench_function("build_moment_cusp_homogenized_k3", |b| b.iter(|| build_moment_h(black_box(&h), 3).unwrap()));
}

fn solve_sdp(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    g.sample_size(20);
    let rel = build_moment(&interval_problem(), 4).unwrap();
    g.bench_function("interval_k4", |b| b.iter(|| solve(&rel.sdp, &SolverOptions::default()).unwrap()));
    let rel = build_moment(&tangent_line_problem(), 3).unwrap();
    g.bench_function("tangent_k3", |b| b.iter(|| solve(&rel.sdp, &SolverOptions::default()).unwrap()));
    let rel = build_moment_h(&homogenize_problem(&cusp_problem()).unwrap(), 3).unwrap();
    g.bench_function("cusp_homogenized_k3", |b| b.iter(|| solve(&rel.sdp, &SolverOptions::default()).unwrap()));
    let inst = generate(&GenSpec::new(5, 3, 2, 7).unwrap()).unwrap();
    let rel = build_moment(&inst.problem, 2).unwrap();
    g.bench_function("random_532_k2", |b| {
        b.iter(|| solve_relaxation(&rel, &HierarchyOptions::default()).unwrap())
    });
    g.finish();
}

fn extraction(c: &mut Criterion) {
    let basis = std::sync::Arc::new(lsipp_core::MomentBasis::new(3, 6));
    let mut z = MomentVector::zeros(basis.clone());
    for (p, w) in [([0.1, 0.2, 0.3], 1.0), ([-0.5, 0.5, 0.0], 2.0), ([0.9, -0.4, 0.7], 0.5)] {
        z.add_scaled(w, &zeta_in_basis(&p, basis.clone()));
    }
    let opts = CertifyOptions::default();
    c.bench_function("extract_three_atoms", |b| b.iter(|| extract_atoms(black_box(&z), 3, &opts).unwrap()));
}

criterion_group!(benches, polynomials, build, solve_sdp, extraction);
criterion_main!(benches);
