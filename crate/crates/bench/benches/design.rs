use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mbseq::numerics::sym_eig;
use mbseq::rounding::{round, CandidateEvaluator};
use mbseq::sdp::{build_branch_sdp, solve, CoherenceConvention};
use mbseq::{design_set, BasisKind, CoherenceTolerance, DesignConfig, SolverOptions};
use mbseq_bench::{geometry, priors};

fn branch_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("branch_sdp");
    group.sample_size(10);
    for r in [2, 4] {
        let geo = geometry(15, r, BasisKind::Fourier);
        let prior = priors(15, r, 7);
        let problem = build_branch_sdp(
            &geo.message,
            &geo.interferer,
            &prior,
            0.4,
            CoherenceConvention::Squared,
            geo.grid,
        )
        .unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("N15_R{r}")),
            &problem,
            |b, p| b.iter(|| solve(black_box(p), &SolverOptions::default()).unwrap()),
        );
    }
    group.finish();
}

fn rounding(c: &mut Criterion) {
    let geo = geometry(15, 4, BasisKind::Fourier);
    let prior = priors(15, 4, 7);
    let problem = build_branch_sdp(
        &geo.message,
        &geo.interferer,
        &prior,
        0.4,
        CoherenceConvention::Squared,
        geo.grid,
    )
    .unwrap();
    let relaxed = solve(&problem, &SolverOptions::default()).unwrap();
    let eig = sym_eig(&relaxed.matrix).unwrap();
    let evaluator = CandidateEvaluator::branch(
        &geo.message,
        &geo.interferer,
        &prior,
        0.4,
        CoherenceConvention::Squared,
        geo.grid,
    )
    .unwrap();
    let mut group = c.benchmark_group("rounding");
    group.sample_size(20);
    group.bench_function("N15_R4_L2000", |b| {
        b.iter(|| round(black_box(&eig), &evaluator, 2000, 1, 7).unwrap())
    });
    group.finish();
}

fn full_design(c: &mut Criterion) {
    let config = DesignConfig {
        base_len: 7,
        oversampling: 2,
        alpha: CoherenceTolerance(0.5),
        candidates: 500,
        center: Some(4),
        basis: BasisKind::Slepian,
        seed: 3,
        solver: SolverOptions::default(),
        coherence: CoherenceConvention::Squared,
    };
    let mut group = c.benchmark_group("design_set");
    group.sample_size(10);
    group.bench_function("N7_R2_L500", |b| {
        b.iter(|| design_set(black_box(&config)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, branch_solve, rounding, full_design);
criterion_main!(benches);
