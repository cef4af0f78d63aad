use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use dirmod_bench::fixture;
use dirmod_core::complex_linalg::{default_rank_tol, null_space_basis, svd};
use dirmod_core::dm_beamformer::{build_problem, solve};
use dirmod_core::qp_solver;
use dirmod_core::sim_engine::{run_trial, trial_rng, ScenarioConfig};
use dirmod_core::{QpInstance, QpSettings};

fn bench_svd(c: &mut Criterion) {
    let (h_r, symbols) = fixture(4, 8, 1);
    let rows = dirmod_core::dm_beamformer::build_phase_constraints(&h_r, &symbols);
    c.bench_function("svd_4x16", |b| {
        b.iter(|| svd(black_box(&rows)).unwrap());
    });
    c.bench_function("null_space_4x16", |b| {
        b.iter(|| null_space_basis(black_box(&rows), default_rank_tol(4, 16)).unwrap());
    });
}

fn bench_qp(c: &mut Criterion) {
    let (h_r, symbols) = fixture(4, 8, 2);
    let problem = build_problem(&h_r, &symbols, 8.0, None).unwrap();
    c.bench_function("qp_solve_8x12", |b| {
        b.iter(|| {
            let inst =
                QpInstance::new(black_box(problem.g.clone()), black_box(problem.h.clone()))
                    .unwrap();
            qp_solver::solve(&inst).unwrap()
        });
    });
}

fn bench_beamformer(c: &mut Criterion) {
    let (h_r, symbols) = fixture(4, 8, 3);
    c.bench_function("dm_build_and_solve_k4_l8", |b| {
        b.iter(|| {
            let problem =
                build_problem(black_box(&h_r), black_box(&symbols), 8.0, None).unwrap();
            solve(&problem, &QpSettings::default()).unwrap()
        });
    });
}

fn bench_trial(c: &mut Criterion) {
    let cfg = ScenarioConfig {
        trials: 1,
        ..Default::default()
    };
    c.bench_function("run_trial_both_schemes", |b| {
        let mut trial = 0usize;
        b.iter(|| {
            trial += 1;
            let mut rng = trial_rng(9, 0, trial);
            run_trial(black_box(&cfg), &mut rng)
        });
    });
}

criterion_group!(benches, bench_svd, bench_qp, bench_beamformer, bench_trial);
criterion_main!(benches);
